#pragma once

#include "rfent/entropy.hpp"
#include "rfent/geometry.hpp"
#include "rfent/io.hpp"
#include "rfent/lgeodesic.hpp"
#include "rfent/linalg.hpp"
#include "rfent/ode.hpp"
#include "rfent/quadrature.hpp"
#include "rfent/variation.hpp"
#include "rfent/warped.hpp"
