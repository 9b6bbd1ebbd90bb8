#pragma once

// Umbrella header for the iterclust library.

#include "iterclust/error.hpp"
#include "iterclust/random.hpp"
#include "iterclust/dataset.hpp"
#include "iterclust/cat_tree.hpp"
#include "iterclust/objective.hpp"
#include "iterclust/construct.hpp"
#include "iterclust/optimize.hpp"
#include "iterclust/frontier.hpp"
#include "iterclust/evaluate.hpp"
#include "iterclust/tree_io.hpp"
#include "iterclust/experiment.hpp"
