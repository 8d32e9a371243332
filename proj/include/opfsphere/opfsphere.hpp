#pragma once

#include "sphere_core.hpp"
#include "dyadic_grid.hpp"
#include "conflict_graph.hpp"
#include "convex_polygon.hpp"
#include "density_filter.hpp"
#include "scaling.hpp"
#include "convexify.hpp"
#include "search.hpp"
#include "serialization.hpp"
