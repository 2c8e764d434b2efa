#pragma once

#include "reljt/error.hpp"
#include "reljt/hypertree.hpp"
#include "reljt/model_io.hpp"
#include "reljt/propagation.hpp"
#include "reljt/query.hpp"
#include "reljt/relation.hpp"
#include "reljt/sql.hpp"
