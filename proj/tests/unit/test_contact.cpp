#include <doctest.h>

#include <cmath>
#include <numbers>

#include "magflow/contact.hpp"
#include "magflow/errors.hpp"
#include "magflow/taimanov.hpp"

using namespace magflow;

namespace {
constexpr double kPi = std::numbers::pi;
}

TEST_CASE("flow coefficients") {
  const MagneticSystem one(SurfaceModel::sphere(), MagneticField::constant(1));
  const CoframeValue a = xs_coefficients(one, 1, {{0, 0.2, 0.1}, 0.4});
  CHECK(a.a == doctest::Approx(1));
  CHECK(a.p == doctest::Approx(1));
  CHECK(a.b == doctest::Approx(0).scale(1));
  const CoframeValue z = xs_coefficients(one, 0, {{0, 0.2, 0.1}, 0.4});
  CHECK(z.p == 0);
  const MagneticSystem minus2(SurfaceModel::flat_torus(), MagneticField::constant(-2));
  CHECK(xs_coefficients(minus2, 0.5, {{0, 0.2, 0.1}, 1.0}).p == doctest::Approx(-1));
}

TEST_CASE("frame and coframe are dual") {
  for (const SurfaceModel& s : {SurfaceModel::sphere(), SurfaceModel::hyperbolic(),
                                SurfaceModel::conformal_torus(PlanarFunction::cosine(0.3, 1, 1, 1, 1))}) {
    const SMPoint x{{0, 0.3, 0.8}, 2.1};
    const CoframeValue X = coframe(s, x, frame_X(s, x)), V = coframe(s, x, frame_V()), H = coframe(s, x, frame_H(s, x));
    CHECK(X.a == doctest::Approx(1));
    CHECK(std::abs(X.p) + std::abs(X.b) < 1e-14);
    CHECK(V.p == doctest::Approx(1));
    CHECK(std::abs(V.a) + std::abs(V.b) < 1e-14);
    CHECK(H.b == doctest::Approx(1));
    CHECK(std::abs(H.a) + std::abs(H.p) < 1e-14);
    CHECK(norm(s, x.q, unit_vector(s, x)) == doctest::Approx(1));
  }
}

TEST_CASE("structure equations converge at first order") {
  const StructuralResiduals f = structural_relations_check(SurfaceModel::flat_torus(), 1e-2);
  CHECK(f.d_psi == 0);
  CHECK(structural_relations_check(SurfaceModel::flat_torus(), 1e-3).d_psi == 0);
  for (const SurfaceModel& s : {SurfaceModel::sphere(), SurfaceModel::hyperbolic()}) {
    const StructuralResiduals a = structural_relations_check(s, 1e-2), b = structural_relations_check(s, 5e-3);
    CHECK(a.d_alpha / b.d_alpha == doctest::Approx(2).epsilon(0.1));
    CHECK(a.d_psi / b.d_psi == doctest::Approx(2).epsilon(0.1));
    CHECK(a.d_beta / b.d_beta == doctest::Approx(2).epsilon(0.1));
  }
}

TEST_CASE("homogeneous certificates") {
  ContactCandidate plus, minus;
  plus.kind = CandidateKind::HomogeneousPlus;
  minus.kind = CandidateKind::HomogeneousMinus;
  const MagneticSystem sphere(SurfaceModel::sphere(), MagneticField::constant(1));
  const MagneticSystem g2(SurfaceModel::hyperbolic(2), MagneticField::constant(1));
  const ContactCertificate a = contact_candidate_min(sphere, 1, plus, {32, 16});
  CHECK(a.min_value == doctest::Approx(2).epsilon(1e-12));
  CHECK(a.verdict == ContactVerdict::Positive);
  const ContactCertificate b = contact_candidate_min(g2, 2, minus, {32, 16});
  CHECK(b.max_value == doctest::Approx(-3).epsilon(1e-12));
  CHECK(b.verdict == ContactVerdict::Negative);
  const ContactCertificate c = contact_candidate_min(g2, 1, minus, {32, 16});
  CHECK(std::abs(c.min_value) < 1e-12);
  CHECK(c.verdict == ContactVerdict::Indeterminate);
  CHECK(std::string(verdict_name(c.verdict)) == "indeterminate");
  // soundness against the orbit oracle: positive iff contractible circles are absent
  for (double s : {0.5, 0.9, 1.5, 3.0}) {
    const bool positive = contact_candidate_min(g2, s, minus, {16, 8}).verdict == ContactVerdict::Positive;
    CHECK(positive == !homogeneous_oracle(OracleKind::Hyperbolic, s).exists_contractible);
  }
}

TEST_CASE("exact and non-exact candidates") {
  const MagneticSystem height(SurfaceModel::sphere(), MagneticField::sphere_height(1, 0.3));
  ContactCandidate c;
  c.kind = CandidateKind::ExactPrimitive;
  c.zeta = contact_zeta(height);
  // d tau must be proportional to omega_s; the certificate checks it
  const ContactCertificate cert = contact_candidate_min(height, 0.5, nonexact_candidate(height), {32, 16});
  CHECK(cert.d_ratio == doctest::Approx(1).epsilon(1e-4));
  CHECK(cert.verdict == ContactVerdict::Positive);
  // a wrong primitive is refused
  ContactCandidate wrong;
  wrong.kind = CandidateKind::ExactPrimitive;
  wrong.zeta = zero_primitive();
  const MagneticSystem bump(SurfaceModel::flat_torus(),
                            MagneticField(PlanarFunction::bump(0, -25, 0.15, 0.5, 0.5, 1, 1, true)));
  CHECK_THROWS_AS(contact_candidate_min(bump, 1, wrong, {16, 8}), InvalidCandidate);
  CHECK_THROWS_AS(nonexact_candidate(bump), UnsupportedError);
}

TEST_CASE("Liouville action and rotation vectors") {
  const MagneticSystem sphere(SurfaceModel::sphere(), MagneticField::constant(1));
  const LiouvilleAction L = liouville_action(sphere, 0.7, {64, 32});
  CHECK(L.volume == doctest::Approx(8 * kPi * kPi).epsilon(1e-9));
  CHECK(L.quadrature_action == doctest::Approx(L.closed_form_action).epsilon(1e-6));
  const RotationVector rs = rotation_vector_liouville(sphere, 0.7, {64, 32});
  CHECK_FALSE(rs.torus);
  CHECK(rs.fiber == 0);

  const MagneticSystem bump(SurfaceModel::flat_torus(),
                            MagneticField(PlanarFunction::bump(0, -25, 0.15, 0.5, 0.5, 1, 1, true)));
  const LiouvilleAction E = liouville_action(bump, 1.0, {64, 32});
  CHECK(std::abs(E.flip_integral) < 1e-9);
  CHECK(E.quadrature_action == doctest::Approx(E.closed_form_action).epsilon(1e-6));
}

TEST_CASE("counter-clockwise contractible orbit is a positive fibre") {
  const MagneticSystem flat(SurfaceModel::flat_torus(), MagneticField::constant(1));
  const Orbit o = shoot_periodic(flat, energy_of_s(3), {{0, 0.5, 0.5}, Vec2(1, 0)});
  const RotationVector r = rotation_vector_orbit(flat, o);
  CHECK(r.torus);
  CHECK(r.m == 0);
  CHECK(r.n == 0);
  CHECK(r.fiber == doctest::Approx(1));
}

TEST_CASE("Gauss-Bonnet and the action identity on the sphere") {
  const MagneticSystem sphere(SurfaceModel::sphere(), MagneticField::constant(1));
  const double s = 1.5;
  const Orbit o = shoot_periodic(sphere, energy_of_s(s), {{0, std::tan(std::atan(1 / s) / 2), 0}, Vec2(0, 1)});
  const GaussBonnetCheck g = gauss_bonnet_action_check(sphere, o);
  CHECK(g.orientation == 1);
  CHECK(g.gauss_bonnet_residual < 1e-4);
  CHECK(g.residual < 1e-3);
  // non-exact torus fields have no correction term
  const MagneticSystem flat(SurfaceModel::flat_torus(), MagneticField::constant(1));
  const Orbit t = shoot_periodic(flat, energy_of_s(3), {{0, 0.5, 0.5}, Vec2(1, 0)});
  CHECK_THROWS_AS(gauss_bonnet_action_check(flat, t), UnsupportedError);
}
