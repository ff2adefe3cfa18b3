#pragma once

#include "choquet/common.hpp"
#include "choquet/measures.hpp"
#include "choquet/cost.hpp"
#include "choquet/lp.hpp"
#include "choquet/ot.hpp"
#include "choquet/multimarginal.hpp"
#include "choquet/convex_order.hpp"
#include "choquet/mot.hpp"
#include "choquet/evaluator.hpp"
#include "choquet/bclass.hpp"
#include "choquet/mti.hpp"
