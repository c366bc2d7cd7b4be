#pragma once

#include "roughdelay/controlled.hpp"
#include "roughdelay/fbm.hpp"
#include "roughdelay/grid.hpp"
#include "roughdelay/increment.hpp"
#include "roughdelay/integral.hpp"
#include "roughdelay/io.hpp"
#include "roughdelay/levy.hpp"
#include "roughdelay/philox.hpp"
#include "roughdelay/sewing.hpp"
#include "roughdelay/sigma.hpp"
#include "roughdelay/smooth.hpp"
#include "roughdelay/solver.hpp"
#include "roughdelay/verify.hpp"
