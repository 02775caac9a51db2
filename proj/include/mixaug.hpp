#pragma once

#include "mixaug/audio.hpp"
#include "mixaug/config.hpp"
#include "mixaug/csv.hpp"
#include "mixaug/dataset.hpp"
#include "mixaug/error.hpp"
#include "mixaug/experiment.hpp"
#include "mixaug/fft.hpp"
#include "mixaug/log.hpp"
#include "mixaug/loudness.hpp"
#include "mixaug/metrics.hpp"
#include "mixaug/perturb.hpp"
#include "mixaug/pitch.hpp"
#include "mixaug/resample.hpp"
#include "mixaug/rng.hpp"
#include "mixaug/sampling.hpp"
#include "mixaug/separators.hpp"
#include "mixaug/stft.hpp"
#include "mixaug/synth.hpp"
#include "mixaug/wav.hpp"
