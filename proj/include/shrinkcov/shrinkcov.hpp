#pragma once

#include "shrinkcov/common.hpp"
#include "shrinkcov/cov_matrix.hpp"
#include "shrinkcov/io.hpp"
#include "shrinkcov/mc.hpp"
#include "shrinkcov/models.hpp"
#include "shrinkcov/multiclass.hpp"
#include "shrinkcov/portfolio.hpp"
#include "shrinkcov/qp.hpp"
#include "shrinkcov/rng.hpp"
#include "shrinkcov/rscm.hpp"
#include "shrinkcov/scalars.hpp"
#include "shrinkcov/scm.hpp"
#include "shrinkcov/tabasco.hpp"
#include "shrinkcov/theory.hpp"
