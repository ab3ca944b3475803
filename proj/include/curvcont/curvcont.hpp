#ifndef CURVCONT_CURVCONT_HPP
#define CURVCONT_CURVCONT_HPP

#include "errors.hpp"
#include "geometry.hpp"
#include "symmetry.hpp"
#include "state.hpp"
#include "hamiltonian.hpp"
#include "dynamics.hpp"
#include "continuation.hpp"
#include "scenarios.hpp"
#include "io.hpp"
#include "verify.hpp"

#endif
