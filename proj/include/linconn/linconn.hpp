#pragma once

#include "linconn/expr.hpp"
#include "linconn/model.hpp"
#include "linconn/tensor.hpp"
#include "linconn/geometry.hpp"
#include "linconn/affine.hpp"
#include "linconn/sode.hpp"
#include "linconn/cotangent.hpp"
#include "linconn/transport.hpp"
#include "linconn/loader.hpp"
#include "linconn/report.hpp"
