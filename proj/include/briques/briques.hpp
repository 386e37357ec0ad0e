#pragma once
// Everything except the command-line layer (briques/experiments.hpp, which needs nlohmann/json).

#include "briques/rational.hpp"
#include "briques/geometry.hpp"
#include "briques/configuration.hpp"
#include "briques/dynamics.hpp"
#include "briques/strip.hpp"
#include "briques/frontier.hpp"
#include "briques/plane.hpp"
#include "briques/render.hpp"
