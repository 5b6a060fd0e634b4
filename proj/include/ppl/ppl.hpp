#pragma once

#include "ppl/bounds.hpp"
#include "ppl/common.hpp"
#include "ppl/dataset.hpp"
#include "ppl/errors.hpp"
#include "ppl/harness.hpp"
#include "ppl/loss.hpp"
#include "ppl/optim.hpp"
#include "ppl/risk.hpp"
#include "ppl/stability.hpp"
