#pragma once

#include "calendar.hpp"
#include "csv.hpp"
#include "dgp.hpp"
#include "error.hpp"
#include "factor.hpp"
#include "inference.hpp"
#include "irf.hpp"
#include "lp.hpp"
#include "panel.hpp"
#include "pipeline.hpp"
#include "random.hpp"
#include "svg.hpp"
#include "symmetry.hpp"
#include "transform.hpp"
