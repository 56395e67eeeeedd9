#pragma once

#include "vbmodem/channel.hpp"
#include "vbmodem/detector.hpp"
#include "vbmodem/dsp.hpp"
#include "vbmodem/freqplan.hpp"
#include "vbmodem/golay.hpp"
#include "vbmodem/graymap.hpp"
#include "vbmodem/harness.hpp"
#include "vbmodem/modem.hpp"
#include "vbmodem/types.hpp"
#include "vbmodem/wav.hpp"
