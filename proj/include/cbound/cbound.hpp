#pragma once

#include "cbound/bounds.hpp"
#include "cbound/ensemble.hpp"
#include "cbound/error.hpp"
#include "cbound/format.hpp"
#include "cbound/learners.hpp"
#include "cbound/margin.hpp"
#include "cbound/oracle.hpp"
#include "cbound/output_space.hpp"
#include "cbound/report.hpp"
#include "cbound/serialization.hpp"
#include "cbound/studies.hpp"
#include "cbound/summation.hpp"
