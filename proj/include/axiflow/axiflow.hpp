#pragma once

#include "errors.hpp"
#include "geometry.hpp"
#include "quadrature.hpp"
#include "linsolve.hpp"
#include "schemes.hpp"
#include "newton.hpp"
#include "shapes.hpp"
#include "driver.hpp"
#include "io.hpp"
#include "config.hpp"
