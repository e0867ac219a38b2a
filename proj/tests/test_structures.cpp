#include "oracles.hpp"

#include <doctest.h>
#include <stochham/structures.hpp>

using namespace stochham;

namespace {

Vec v2(double a, double b) { return (Vec(2) << a, b).finished(); }
Vec v3(double a, double b, double c) { return (Vec(3) << a, b, c).finished(); }

ScalarField half_norm2() { return quadratic_field(Mat::Identity(2, 2)); }

ScalarField q_squared() {
  return make_field([](const Vec& z) { return z[0] * z[0]; },
                    [](const Vec& z, Vec& g) {
                      g.setZero(z.size());
                      g[0] = 2.0 * z[0];
                    });
}

// f = q^3 p + p^2 q on R^2, analytic gradient only
ScalarField cubic() {
  return make_field([](const Vec& z) { return z[0] * z[0] * z[0] * z[1] + z[1] * z[1] * z[0]; },
                    [](const Vec& z, Vec& g) {
                      g.resize(2);
                      g[0] = 3.0 * z[0] * z[0] * z[1] + z[1] * z[1];
                      g[1] = z[0] * z[0] * z[0] + 2.0 * z[1] * z[0];
                    });
}

}  // namespace

TEST_CASE("canonical tensor is the (q,p) block matrix") {
  const auto s = PhaseStructure::canonical(4);
  const Mat B = s.tensor_at(Vec::Zero(4));
  Mat expect = Mat::Zero(4, 4);
  expect.topRightCorner(2, 2).setIdentity();
  expect.bottomLeftCorner(2, 2) = -Mat::Identity(2, 2);
  CHECK((B - expect).norm() == 0.0);
  CHECK(s.antisymmetry_defect(Vec::Random(4)) == 0.0);
  CHECK(s.is_constant());
  CHECK(s.kind() == StructureKind::CanonicalSymplectic);
  CHECK_THROWS_AS(PhaseStructure::canonical(3), Error);
}

TEST_CASE("hamiltonian vector field sign convention") {
  const auto s = PhaseStructure::canonical(2);
  const Vec a = hamiltonian_vector_field(s, half_norm2(), v2(0, 0));
  CHECK(a.norm() == 0.0);
  const Vec b = hamiltonian_vector_field(s, half_norm2(), v2(1, 0));
  CHECK(b[0] == doctest::Approx(0.0));
  CHECK(b[1] == doctest::Approx(-1.0));

  const auto so3 = PhaseStructure::lie_poisson_so3();
  const Vec c = hamiltonian_vector_field(so3, coordinate_field(3, 2), v3(1, 0, 0));
  CHECK(c[0] == 0.0);
  CHECK(c[1] == -1.0);
  CHECK(c[2] == 0.0);
}

TEST_CASE("poisson bracket examples") {
  const auto s = PhaseStructure::canonical(2);
  CHECK(poisson_bracket(s, coordinate_field(2, 0), coordinate_field(2, 1), v2(0.3, -2.0)) == 1.0);
  CHECK(poisson_bracket(s, coordinate_field(2, 1), coordinate_field(2, 0), v2(0.3, -2.0)) == -1.0);
  CHECK(poisson_bracket(s, q_squared(), coordinate_field(2, 1), v2(3, 7)) == doctest::Approx(6.0));
  CHECK(poisson_bracket(s, cubic(), cubic(), v2(1.2, -0.4)) == 0.0);

  const auto so3 = PhaseStructure::lie_poisson_so3();
  const Vec z = v3(0.3, -1.1, 2.0);
  // antisymmetry is exact
  const ScalarField g = quadratic_field((Mat(3, 3) << 1, 0.2, 0, 0.2, 2, 0, 0, 0, 3).finished());
  const ScalarField l = linear_field(v3(1, -2, 0.5));
  CHECK(poisson_bracket(so3, g, l, z) == -poisson_bracket(so3, l, g, z));
}

TEST_CASE("leibniz rule within FD tolerance") {
  const auto s = PhaseStructure::canonical(2);
  const auto f = cubic();
  const auto g = q_squared();
  const auto h = half_norm2();
  const Vec z = v2(0.7, -0.2);
  const double lhs = poisson_bracket(s, product(f, g), h, z);
  const double rhs = f(z) * poisson_bracket(s, g, h, z) + g(z) * poisson_bracket(s, f, h, z);
  CHECK(lhs == doctest::Approx(rhs).epsilon(1e-10));
}

TEST_CASE("jacobi residual") {
  const auto s = PhaseStructure::canonical(2);
  CHECK(jacobi_residual(s, cubic(), q_squared(), half_norm2(), v2(1, 1), 1e-5) <= 1e-6);

  const auto so3 = PhaseStructure::lie_poisson_so3();
  CHECK(jacobi_residual(so3, coordinate_field(3, 0), coordinate_field(3, 1), coordinate_field(3, 2), v3(1, 2, 3),
                        1e-5) <= 1e-6);

  // mu x v plus a z-dependent symmetric-free perturbation that breaks Jacobi
  const auto bad = PhaseStructure::general(3, [](const Vec& z, Mat& B) {
    B.resize(3, 3);
    B << 0, -z[2], z[1] + z[0] * z[0], z[2], 0, -z[0], -z[1] - z[0] * z[0], z[0], 0;
  });
  CHECK(bad.antisymmetry_defect(v3(1, 2, 3)) == 0.0);
  CHECK(jacobi_residual(bad, coordinate_field(3, 0), coordinate_field(3, 1), coordinate_field(3, 2), v3(1, 2, 3),
                        1e-5) > 1e-3);
}

TEST_CASE("casimir nullity on so(3)*") {
  const auto so3 = PhaseStructure::lie_poisson_so3();
  REQUIRE(so3.casimirs().size() == 1);
  const ScalarField& C = so3.casimirs()[0];
  Mat Q = Mat::Zero(3, 3);
  Q.diagonal() << 1.0, 0.5, 1.0 / 3.0;
  const std::vector<ScalarField> hs{quadratic_field(Q), linear_field(v3(0.5, 0, 0)), linear_field(v3(0, -0.7, 0))};
  for (const Vec& z : {v3(1, 2, 3), v3(-0.4, 0.1, 0.9), v3(2.5, -3, 0.2)}) {
    CHECK(C(z) == doctest::Approx(z.squaredNorm()));
    for (const auto& h : hs) CHECK(std::abs(poisson_bracket(so3, C, h, z)) <= 1e-10);
  }
}

TEST_CASE("field derivatives match finite differences") {
  const std::vector<Vec> probes{v2(0.1, 0.2), v2(-1.5, 0.7), v2(2.0, -3.0)};
  CHECK(gradient_fd_error(cubic(), probes) <= 1e-6);
  CHECK(gradient_fd_error(half_norm2(), probes) <= 1e-8);
  CHECK(hessian_fd_error(half_norm2(), probes) <= 1e-6);
  // FD Hessian fallback for the cubic: [[6qp, 3q^2 + 2p], [3q^2 + 2p, 2q]]
  const Vec z = v2(0.5, -1.0);
  const Mat H = cubic().hess(z);
  CHECK(H(0, 0) == doctest::Approx(6 * 0.5 * -1.0).epsilon(1e-6));
  CHECK(H(0, 1) == doctest::Approx(3 * 0.25 - 2.0).epsilon(1e-6));
  CHECK(H(1, 0) == H(0, 1));
  CHECK(H(1, 1) == doctest::Approx(1.0).epsilon(1e-6));
  const auto prod = product(cubic(), q_squared());
  const Vec g = prod.grad(z);
  const Vec g_ref = oracle::fd_gradient(prod.value, z);
  CHECK((g - g_ref).norm() <= 1e-7);
  const auto sm = sum(scaled(cubic(), 2.0), constant_field(2, 5.0));
  CHECK(sm(z) == doctest::Approx(2.0 * cubic()(z) + 5.0));
}

TEST_CASE("stratonovich operator") {
  const auto s = PhaseStructure::canonical(2);
  const HamiltonianBundle h({half_norm2(), coordinate_field(2, 0)});
  const Vec z = v2(0.3, 0.8);
  CHECK(stratonovich_operator_apply(s, h, z, Vec::Zero(2)).norm() == 0.0);
  const HamiltonianBundle h1({cubic()});
  const Vec u1 = (Vec(1) << 1.0).finished();
  CHECK((stratonovich_operator_apply(s, h1, z, u1) - hamiltonian_vector_field(s, cubic(), z)).norm() == 0.0);
  // (q^2+p^2)/2 gives (p, -q); q gives (0, -1)
  const Vec sum2 = stratonovich_operator_apply(s, h, z, v2(1, 1));
  CHECK(sum2[0] == doctest::Approx(0.8));
  CHECK(sum2[1] == doctest::Approx(-0.3 - 1.0));
  // linearity in u
  const Vec a = v2(0.2, -1.3), b = v2(2.0, 0.5);
  const Vec lin = stratonovich_operator_apply(s, h, z, 1.5 * a - 0.5 * b);
  const Vec ref = 1.5 * stratonovich_operator_apply(s, h, z, a) - 0.5 * stratonovich_operator_apply(s, h, z, b);
  CHECK((lin - ref).norm() <= 1e-14);
}

TEST_CASE("bundle and dimension guards") {
  CHECK_THROWS_AS(HamiltonianBundle(std::vector<ScalarField>{}), Error);
  const HamiltonianBundle h({half_norm2(), half_norm2()});
  CHECK(h.basis_labels.size() == 2);
  const auto s = PhaseStructure::canonical(2);
  CHECK_THROWS_AS(hamiltonian_vector_field(s, half_norm2(), Vec::Zero(3)), Error);
}

TEST_CASE("vector field jacobian analytic and FD agree") {
  const auto s = PhaseStructure::canonical(2);
  const Vec z = v2(0.4, -0.9);
  const Mat A = vector_field_jacobian(s, half_norm2(), z);
  Mat rot(2, 2);
  rot << 0, 1, -1, 0;
  CHECK((A - rot).norm() <= 1e-14);
  const Mat Jfd = vector_field_jacobian(s, cubic(), z);
  // X = (dH/dp, -dH/dq) = (q^3 + 2pq, -(3q^2 p + p^2))
  Mat ref(2, 2);
  ref << 3 * z[0] * z[0] + 2 * z[1], 2 * z[0], -(6 * z[0] * z[1]), -(3 * z[0] * z[0] + 2 * z[1]);
  CHECK((Jfd - ref).norm() <= 1e-6);
  const auto so3 = PhaseStructure::lie_poisson_so3();
  const Mat Jr = vector_field_jacobian(so3, quadratic_field(Mat::Identity(3, 3)), v3(1, 2, 3));
  CHECK(Jr.norm() <= 1e-8);  // mu x mu = 0 identically
}
