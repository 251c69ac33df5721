#pragma once

#include "dynrec/adaptive.hpp"
#include "dynrec/diffusion.hpp"
#include "dynrec/graph.hpp"
#include "dynrec/io.hpp"
#include "dynrec/metrics.hpp"
#include "dynrec/oracle.hpp"
#include "dynrec/rng.hpp"
#include "dynrec/stream.hpp"
#include "dynrec/synthetic.hpp"
#include "dynrec/types.hpp"
#include "dynrec/verify.hpp"
