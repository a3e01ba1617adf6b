#pragma once

#include "gapbound/error.hpp"
#include "gapbound/linalg.hpp"
#include "gapbound/operator.hpp"
#include "gapbound/distfun.hpp"
#include "gapbound/enclosure.hpp"
#include "gapbound/lehmann.hpp"
#include "gapbound/models.hpp"
