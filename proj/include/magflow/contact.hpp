#pragma once
#include <string>
#include <vector>

#include "magflow/orbitfind.hpp"

namespace magflow {

// Point of the unit tangent bundle: v = exp(-lam) (cos phi, sin phi) in chart
// components, phi measured counter-clockwise from the first chart direction.
struct SMPoint {
  ChartPoint q;
  double phi = 0;
};

// Coefficients of a 1-form a alpha + p psi + b beta, equivalently the values
// (alpha, psi, beta) of the coframe on a tangent vector.
struct CoframeValue {
  double a = 0, p = 0, b = 0;
};

// Tangent vector of SM in coordinates (du, dv, dphi).
using SMVector = Eigen::Vector3d;

Vec2 unit_vector(const SurfaceModel& s, const SMPoint& x);
// alpha = e^lam (cos du + sin dv), beta = e^lam (-sin du + cos dv),
// psi = dphi - lam_v du + lam_u dv
CoframeValue coframe(const SurfaceModel& s, const SMPoint& x, const SMVector& w);
// Frame vectors X (geodesic spray), V = d/dphi, H, dual to the coframe.
SMVector frame_X(const SurfaceModel& s, const SMPoint& x);
SMVector frame_V();
SMVector frame_H(const SurfaceModel& s, const SMPoint& x);

// (alpha, psi, beta)(X_s) = (1, s f, 0)
CoframeValue xs_coefficients(const MagneticSystem& sys, double s, const SMPoint& x);

struct StructuralResiduals {
  double d_alpha, d_psi, d_beta;  // max |circulation - claimed flux| / area
};
// Discrete Stokes check on random parallelograms of side h (fixed seed).
StructuralResiduals structural_relations_check(const SurfaceModel& s, double h, int samples = 64, unsigned seed = 7);

enum class CandidateKind { HomogeneousPlus, HomogeneousMinus, ExactPrimitive, NonExact, ClosedTorus };

// alpha +- s psi; alpha - s zeta; alpha - s zeta + s [sigma] / (2 pi chi) psi;
// psi + a du + b dv (torus, psi(V) = 1)
struct ContactCandidate {
  CandidateKind kind = CandidateKind::HomogeneousPlus;
  PrimitivePtr zeta;
  double ratio = 0;  // [sigma] / (2 pi chi(M)) for NonExact
  double a = 0, b = 0;
};

// NonExact candidate for a system with a known zeta (see contact_zeta).
ContactCandidate nonexact_candidate(const MagneticSystem& sys);

enum class ContactVerdict { Positive, Negative, Indeterminate };
const char* verdict_name(ContactVerdict v);

struct ContactCertificate {
  ContactVerdict verdict = ContactVerdict::Indeterminate;
  double min_value = 0, max_value = 0;
  double s = 0;
  std::string witness;
  double d_ratio = 0;  // d tau = d_ratio * omega_s on the spot checks
};

struct SMGrid {
  int q = 128;    // base resolution (torus: q x q)
  int fiber = 64;
};

// Value of the candidate on X_s at one point.
double candidate_on_flow(const MagneticSystem& sys, double s, const ContactCandidate& c, const SMPoint& x);

ContactCertificate contact_candidate_min(const MagneticSystem& sys, double s, const ContactCandidate& c,
                                         const SMGrid& grid = {});

// Primitive zeta with d zeta = sigma - ([sigma] / 2 pi chi) K mu where one is
// available in closed form or spectrally (constant fields, sphere heights,
// exact torus fields).
PrimitivePtr contact_zeta(const MagneticSystem& sys);

struct LiouvilleAction {
  double volume;
  double closed_form_action;
  double quadrature_action;
  double flip_integral;
};
LiouvilleAction liouville_action(const MagneticSystem& sys, double s, const SMGrid& grid = {});

struct RotationVector {
  bool torus = false;
  double m = 0, n = 0;  // horizontal part (torus only)
  double fiber = 0;     // coefficient of the fiber class
};
RotationVector rotation_vector_liouville(const MagneticSystem& sys, double s, const SMGrid& grid = {});
RotationVector rotation_vector_orbit(const MagneticSystem& sys, const Orbit& orbit);

struct GaussBonnetCheck {
  double lhs;           // S_s(xi_boundary) / s
  double rhs;           // T_k(disc) + o chi(disc) [sigma] / chi(M)
  double residual;
  double orientation;   // +1 counter-clockwise, -1 clockwise
  double gauss_bonnet;  // int_disc K mu + total geodesic curvature
  double gauss_bonnet_residual;
};
// The orbit must be a simple closed curve in one chart bounding a disc there.
GaussBonnetCheck gauss_bonnet_action_check(const MagneticSystem& sys, const Orbit& orbit, int polygon_vertices = 1024);

}  // namespace magflow
