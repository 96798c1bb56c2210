#ifndef TNU_TNU_HPP
#define TNU_TNU_HPP

#include "tnu/errors.hpp"
#include "tnu/symspace.hpp"
#include "tnu/sample.hpp"
#include "tnu/domain.hpp"
#include "tnu/scatter.hpp"
#include "tnu/locscatter.hpp"
#include "tnu/asymptotics.hpp"
#include "tnu/oned.hpp"
#include "tnu/simlab.hpp"
#include "tnu/csv.hpp"

#endif  // TNU_TNU_HPP
