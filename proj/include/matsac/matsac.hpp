#ifndef MATSAC_MATSAC_HPP
#define MATSAC_MATSAC_HPP

/// Umbrella header for the matsac library: Matsubara-sample analytic
/// continuation via segment interpolation, conformal unzipping, Hankel pole
/// recovery, and constrained weight fits.

#include "matsac/interp.hpp"
#include "matsac/io.hpp"
#include "matsac/model.hpp"
#include "matsac/nnls.hpp"
#include "matsac/prony.hpp"
#include "matsac/qp.hpp"
#include "matsac/recover.hpp"
#include "matsac/unzip.hpp"

#endif  // MATSAC_MATSAC_HPP
