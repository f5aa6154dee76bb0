#pragma once

#include "crystal/acceptance.hpp"
#include "crystal/elliptic.hpp"
#include "crystal/error.hpp"
#include "crystal/evolution.hpp"
#include "crystal/io.hpp"
#include "crystal/kernels.hpp"
#include "crystal/numerics.hpp"
#include "crystal/selfsimilar.hpp"
