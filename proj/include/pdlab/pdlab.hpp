#pragma once

#include "pdlab/constellation.hpp"
#include "pdlab/error.hpp"
#include "pdlab/metrics.hpp"
#include "pdlab/predistort.hpp"
#include "pdlab/sequence.hpp"
#include "pdlab/txchain.hpp"
#include "pdlab/waveform.hpp"
