#pragma once

#include "relubound/error.hpp"
#include "relubound/network.hpp"
#include "relubound/network_io.hpp"
#include "relubound/bounds.hpp"
#include "relubound/propagate.hpp"
#include "relubound/milp_model.hpp"
#include "relubound/formulate.hpp"
#include "relubound/lp_writer.hpp"
#include "relubound/simplex.hpp"
#include "relubound/branch_bound.hpp"
#include "relubound/oracle.hpp"
#include "relubound/bounder.hpp"
#include "relubound/verify.hpp"
