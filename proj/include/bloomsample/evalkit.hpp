#pragma once

#include "bloomsample/evalkit/accuracy.hpp"
#include "bloomsample/evalkit/calibrate.hpp"
#include "bloomsample/evalkit/chi_squared.hpp"
#include "bloomsample/evalkit/generators.hpp"
#include "bloomsample/evalkit/sweep.hpp"
