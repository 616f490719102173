#pragma once

#include "decofringe/specfun.hpp"
#include "decofringe/quad.hpp"
#include "decofringe/params.hpp"
#include "decofringe/decoherence.hpp"
#include "decofringe/fringe.hpp"
#include "decofringe/estimation.hpp"
#include "decofringe/io.hpp"
