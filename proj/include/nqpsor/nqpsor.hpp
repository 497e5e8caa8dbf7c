#ifndef NQPSOR_NQPSOR_HPP
#define NQPSOR_NQPSOR_HPP

#include "nqpsor/linalg.hpp"
#include "nqpsor/rng.hpp"
#include "nqpsor/model.hpp"
#include "nqpsor/diagnostics.hpp"
#include "nqpsor/solvers.hpp"
#include "nqpsor/generators.hpp"
#include "nqpsor/imaging.hpp"
#include "nqpsor/io.hpp"

#endif  // NQPSOR_NQPSOR_HPP
