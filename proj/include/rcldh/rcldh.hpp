#ifndef RCLDH_RCLDH_HPP
#define RCLDH_RCLDH_HPP

#include "rcldh/core.hpp"
#include "rcldh/fft.hpp"
#include "rcldh/stack_io.hpp"
#include "rcldh/reconstruct.hpp"
#include "rcldh/stft.hpp"
#include "rcldh/svdfilter.hpp"
#include "rcldh/doppler.hpp"
#include "rcldh/composite.hpp"
#include "rcldh/simulator.hpp"
#include "rcldh/pipeline.hpp"

#endif  // RCLDH_RCLDH_HPP
