#pragma once

// Point-treatment mediation: natural and randomized interventional effects
// of the full law, their observed-data functionals, and membership checks
// for the two nested identification models.
//
// Baseline covariates L are handled uniformly: interventional mediator draws
// condition on L, observed-data functionals condition on l and average over
// P(l), and every independence assumption is checked within strata of L.
// With L empty everything reduces to the covariate-free definitions.

#include <string>
#include <vector>

#include "causal_ident/joint_pmf.hpp"
#include "causal_ident/model.hpp"
#include "causal_ident/verdict.hpp"

namespace causal_ident {

struct MediationFrame {
  std::vector<std::string> baseline;        // L
  std::string treatment;                    // A
  std::vector<std::string> post_treatment;  // W
  std::string mediator;                     // M
  std::string outcome;                      // Y
  std::string active = "1";                 // a
  std::string reference = "0";              // a*
};

/// Checks declared order L < A < W < M < Y, a != a*, both labels of A.
/// Throws Error(InvalidArgument | UnknownVariable).
void validate_frame(const Model& model, const MediationFrame& frame);

// --- causal parameters of the full law --------------------------------------

/// E[Y^{a}] - E[Y^{a*}]
template <class S> S gamma_ate(const Model& model, const MediationFrame& frame);
/// Psi_CMN applied to the observed law; a parameter that is trivially identified.
template <class S> S gamma_cmn(const Model& model, const MediationFrame& frame);

/// E[Y^{a, M^{a*}}], nested per noise configuration.
template <class S>
S nested_mean(const Model& model, const MediationFrame& frame, int a, int a_star);
template <class S> S gamma_nde(const Model& model, const MediationFrame& frame);
template <class S> S gamma_nie(const Model& model, const MediationFrame& frame);

/// E[Y^{a, G_{a*|L}}] = sum_l P(l) sum_m P(M^{a*}=m | l) E[Y^{a,m} | l].
template <class S>
S interventional_mean(const Model& model, const MediationFrame& frame, int a, int a_star);
template <class S> S gamma_rde(const Model& model, const MediationFrame& frame);
template <class S> S gamma_rie(const Model& model, const MediationFrame& frame);

/// E[Y^{a, G_{a*|W,L}}]. Throws ZeroMassEvent when some (w, l) reachable under
/// a has no mass under a*.
template <class S>
S conditional_interventional_mean(const Model& model, const MediationFrame& frame, int a,
                                  int a_star);
template <class S> S gamma_rde_w(const Model& model, const MediationFrame& frame);

// --- observed-data functionals ------------------------------------------------

template <class S> S psi_cmn(const JointPmf<S>& law, const MediationFrame& frame);
template <class S> S psi_mediation(const JointPmf<S>& law, const MediationFrame& frame);

/// sum_l P(l) sum_{m,w} E[Y|m,w,a,l] f(m|a*,l) f(w|a,l)
template <class S>
S psi_rde(const JointPmf<S>& law, const MediationFrame& frame, int a, int a_star);
/// sum_l P(l) sum_{m,w} E[Y|m,w,a,l] f(m|w,a*,l) f(w|a,l)
template <class S>
S psi_rde_w(const JointPmf<S>& law, const MediationFrame& frame, int a, int a_star);

/// Psi(a, a*) - Psi(a*, a*): the functionals matched against gamma_rde and
/// gamma_rde_w / gamma_nde.
template <class S> S psi_rde_contrast(const JointPmf<S>& law, const MediationFrame& frame);
template <class S> S psi_rde_w_contrast(const JointPmf<S>& law, const MediationFrame& frame);

// --- model membership -----------------------------------------------------------

/// A1.1 (Y^{a,m}, M^a) _||_ A | L; A1.2 Y^{a,m} _||_ M^a | W, L, A=a;
/// A1.3 positivity of A and of M given (W, A, L).
template <class S>
MembershipReport check_m1(const Model& model, const MediationFrame& frame, double tol);

/// check_m1 plus A2.1 (Y^{a,m}, M^{a*}) _||_ A | W, L and
/// A2.2 Y^{a,m} _||_ M^{a*} | W, A, L, over all a, a* in {active, reference}.
template <class S>
MembershipReport check_m2(const Model& model, const MediationFrame& frame, double tol);

/// Label index of the frame's active / reference treatment value.
int active_label(const Model& model, const MediationFrame& frame);
int reference_label(const Model& model, const MediationFrame& frame);

}  // namespace causal_ident
