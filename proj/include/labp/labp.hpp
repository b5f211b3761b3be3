#pragma once

#include "labp/bethe.hpp"
#include "labp/bp.hpp"
#include "labp/graph.hpp"
#include "labp/half_integer.hpp"
#include "labp/oracle.hpp"
#include "labp/parallel.hpp"
#include "labp/zero_temp.hpp"
