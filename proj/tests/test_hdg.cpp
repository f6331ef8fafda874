#include <gtest/gtest.h>

#include <cstring>
#include <memory>
#include <random>

#include "tphdg/hdg.hpp"
#include "tphdg/parallel.hpp"
#include "tphdg/verify.hpp"

using namespace tphdg;

namespace {

bool bit_equal(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() &&
         std::memcmp(a.data(), b.data(), sizeof(double) * a.size()) == 0;
}

Eigen::MatrixXd random_matrix(Eigen::Index r, Eigen::Index c, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0, 1);
  Eigen::MatrixXd m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
  return m;
}

struct StageRun {
  Eigen::MatrixXd Xs;
  Eigen::VectorXd Ys;
};

StageRun run_stage(const Mesh& mesh, const MaterialField& mats, int k, ExecutionPolicy policy,
                   bool cache = true) {
  AssemblyOptions opt;
  opt.policy = policy;
  opt.cache = cache;
  CondensedSystem sys(mesh, mats, k, 0.01, 0.5, opt);
  const DofLayout& L = sys.layout();
  const Eigen::MatrixXd Xn = random_matrix(L.volume_size(), mesh.num_elements(), 5);
  auto sol = std::make_shared<ManufacturedSolution>(mats.parameters(0));
  const ProblemData data = manufactured_problem(sol, mats);
  const Eigen::MatrixXd F = assemble_loads(mesh, mats, L, data, 0.1, -1, policy);
  const Eigen::VectorXd g = assemble_boundary_rhs(mesh, L, data.boundary, 0.1);
  const Eigen::VectorXd Yd = dirichlet_traces(mesh, L, data.boundary, 0.1);
  StageRun r;
  sys.solve_stage(Xn, F, g, Yd, r.Xs, r.Ys);
  return r;
}

}  // namespace

TEST(Hdg, LayoutSizes) {
  const DofLayout L(2);
  EXPECT_EQ(L.nv, 10);
  EXPECT_EQ(L.ns, 6);
  EXPECT_EQ(L.nf, 4);
  EXPECT_EQ(L.volume_size(), 90);
  EXPECT_EQ(L.local_trace_size(), 72);
  EXPECT_EQ(L.theta_block(0), 60);
}

TEST(Hdg, TraceCountsOnSmallestMesh) {
  const Mesh m = build_structured_mesh(1, 1, {0, 0, 1, 1});
  const TraceMap t(m, DofLayout(0));
  EXPECT_EQ(t.size(), 60);
  EXPECT_EQ(t.num_dirichlet(), 16);
  EXPECT_EQ(t.num_free(), 44);
  EXPECT_EQ(static_cast<int>(t.free_dofs().size()), 44);
}

TEST(Hdg, SerialAndParallelBitIdentical) {
  set_threads(4);
  const Mesh m = build_structured_mesh(4, 4, {0, 0, 1, 1}, SplitPattern::crisscross, 0.1, 3);
  const MaterialField mats(named_parameter_set("L1"));
  for (int k : {0, 2}) {
    const StageRun a = run_stage(m, mats, k, ExecutionPolicy::serial);
    const StageRun b = run_stage(m, mats, k, ExecutionPolicy::parallel);
    EXPECT_TRUE(bit_equal(a.Xs, b.Xs)) << "k = " << k;
    EXPECT_TRUE(bit_equal(a.Ys, b.Ys)) << "k = " << k;
  }
}

TEST(Hdg, OperatorSharingMatchesPerElementAssembly) {
  const Mesh m = build_structured_mesh(3, 3, {0, 0, 1, 1});
  const MaterialField mats(named_parameter_set("L1"));
  AssemblyOptions cached, plain;
  plain.cache = false;
  EXPECT_EQ(CondensedSystem(m, mats, 1, 0.01, 0.5, cached).num_operators(), 2);
  EXPECT_EQ(CondensedSystem(m, mats, 1, 0.01, 0.5, plain).num_operators(), m.num_elements());
  const StageRun a = run_stage(m, mats, 1, ExecutionPolicy::serial, true);
  const StageRun b = run_stage(m, mats, 1, ExecutionPolicy::serial, false);
  const double scale = a.Xs.cwiseAbs().maxCoeff();
  EXPECT_LT((a.Xs - b.Xs).cwiseAbs().maxCoeff(), 1e-11 * scale);
}

TEST(Hdg, EnergyFormIsDampingPlusStabilization) {
  // The coupling blocks are skew, so x'Kx collects damping and stabilization only.
  const Mesh m = build_structured_mesh(2, 2, {0, 0, 1, 1}, SplitPattern::diagonal, 0.1, 4);
  const MaterialField mats(named_parameter_set("L1"));
  const int k = 1;
  const DofLayout L(k);
  const Eigen::MatrixXd X = random_matrix(L.volume_size(), m.num_elements(), 11);
  const Eigen::VectorXd Y = random_matrix(static_cast<Eigen::Index>(m.num_faces()) * L.face_size(), 1, 12);
  double form = 0.0, damp = 0.0;
  for (int e = 0; e < m.num_elements(); ++e) {
    const LocalOperator op = assemble_local(m, e, mats.matrices(0), L);
    const Eigen::VectorXd x = X.col(e);
    const Eigen::VectorXd y = gather_trace(m, L, e, Y);
    form += x.dot(op.Kxx() * x + op.Kxy() * y) + y.dot(op.Kyx() * x) + y.dot(op.Shh.asDiagonal() * y);
    damp += x.head(6 * L.nv).dot(op.damping.head(6 * L.nv).asDiagonal() * x.head(6 * L.nv));
  }
  const double stab = stabilization_form(m, L, X, Y);
  EXPECT_GT(stab, 0.0);
  EXPECT_NEAR(form, damp + stab, 1e-11 * (damp + stab));
}

TEST(Hdg, BhSkewPairing) {
  const Mesh m = build_structured_mesh(1, 1, {0, 0, 1, 1});
  const MaterialField mats(named_parameter_set("L1"));
  const DofLayout L(1);
  const LocalOperator op = assemble_local(m, 0, mats.matrices(0), L);
  const Eigen::VectorXd x = random_matrix(L.volume_size(), 1, 1);
  const Eigen::VectorXd y = random_matrix(L.local_trace_size(), 1, 2);
  // x'Kxx x has no Phi-v contribution and the H coupling cancels against Kyx.
  const int nvel = 6 * L.nv;
  Eigen::VectorXd phi_only = x, v_only = x;
  phi_only.head(nvel).setZero();
  v_only.tail(5 * L.ns).setZero();
  const double b = local_bh(op, L, phi_only, v_only, y);
  EXPECT_NEAR(v_only.dot(op.Kxx() * phi_only), b - phi_only.tail(5 * L.ns).dot(op.H * y), 1e-12 * std::abs(b) + 1e-12);
  EXPECT_NEAR(phi_only.dot(op.Kxx() * v_only), -v_only.dot(op.Kxx() * phi_only), 1e-12 * std::abs(b) + 1e-12);
  EXPECT_NEAR(phi_only.dot(op.Kxy() * y) + y.dot(op.Kyx() * phi_only), 0.0, 1e-12 * std::abs(b) + 1e-12);
}

TEST(Hdg, RecoveredTracesMatchNumericalFlux) {
  const Mesh m = build_structured_mesh(3, 2, {0, 0, 1, 1}, SplitPattern::crisscross, 0.08, 2);
  const MaterialField mats(named_parameter_set("L1"));
  for (int k : {0, 1, 3}) {
    CondensedSystem sys(m, mats, k, 0.01);
    const DofLayout& L = sys.layout();
    const Eigen::MatrixXd X = random_matrix(L.volume_size(), m.num_elements(), 20 + k);
    const Eigen::VectorXd zero = Eigen::VectorXd::Zero(sys.traces().size());
    const Eigen::VectorXd Y = sys.recover_traces(X, zero, zero);
    const Eigen::VectorXd F = numerical_flux(m, mats, L, X);
    EXPECT_LT((Y - F).cwiseAbs().maxCoeff(), 1e-10 * F.cwiseAbs().maxCoeff()) << "k = " << k;
  }
}

TEST(Hdg, ZeroInZeroOut) {
  const Mesh m = build_structured_mesh(2, 2, {0, 0, 1, 1});
  const MaterialField mats(named_parameter_set("L3"));
  CondensedSystem sys(m, mats, 2, 1e-3);
  const DofLayout& L = sys.layout();
  const Eigen::MatrixXd Z = Eigen::MatrixXd::Zero(L.volume_size(), m.num_elements());
  const Eigen::VectorXd z = Eigen::VectorXd::Zero(sys.traces().size());
  Eigen::MatrixXd Xs;
  Eigen::VectorXd Ys;
  sys.solve_stage(Z, Z, z, z, Xs, Ys);
  EXPECT_EQ(Xs.cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(Ys.cwiseAbs().maxCoeff(), 0.0);
}

TEST(Hdg, SolverKindAndReconstruction) {
  const Mesh m = build_structured_mesh(3, 3, {0, 0, 1, 1});
  const MaterialField mats(named_parameter_set("L1"));
  CondensedSystem sys(m, mats, 1, 0.01);
#ifdef TPHDG_HAVE_CHOLMOD
  EXPECT_STREQ(sys.solver_kind(), "cholesky");
#endif
  const DofLayout& L = sys.layout();
  const Eigen::MatrixXd Xn = random_matrix(L.volume_size(), m.num_elements(), 31);
  const Eigen::MatrixXd F = random_matrix(L.volume_size(), m.num_elements(), 32);
  const Eigen::VectorXd z = Eigen::VectorXd::Zero(sys.traces().size());
  Eigen::MatrixXd Xs;
  Eigen::VectorXd Ys;
  sys.solve_stage(Xn, F, z, z, Xs, Ys);
  EXPECT_LT(sys.reconstruction_residual(Xn, F, Xs, Ys), 1e-10);
  // The condensed matrix is symmetric.
  const Eigen::SparseMatrix<double> S = sys.matrix();
  const Eigen::SparseMatrix<double> St = S.transpose();
  EXPECT_LT((S - St).norm(), 1e-12 * S.norm());

  AssemblyOptions flipped;
  flipped.stabilization_sign = -1.0;
  CondensedSystem bad(m, mats, 1, 0.01, 0.5, flipped);
  EXPECT_STREQ(bad.solver_kind(), "lu");
}

TEST(Hdg, OracleSmallMeshes) {
  const MaterialField mats(named_parameter_set("L1"));
  auto sol = std::make_shared<ManufacturedSolution>(mats.parameters(0));
  const ProblemData data = manufactured_problem(sol, mats);
  struct Case { int n; int k; };
  for (const Case c : {Case{1, 0}, Case{2, 2}}) {
    const Mesh m = build_structured_mesh(c.n, c.n, {0, 0, 1, 1}, SplitPattern::diagonal, 0.1, 1);
    const DiscreteState init = random_state(m, DofLayout(c.k), 23);
    const OracleResult r = oracle_monolithic(m, c.k, mats, init, data, 0.1, 0.01);
    EXPECT_LT(r.max_relative_difference, 1e-10) << m.num_elements() << " elements, k = " << c.k;
    EXPECT_GT(r.scale, 0.0);
  }
}

TEST(Hdg, EvaluateStateOfProjection) {
  const Mesh m = build_structured_mesh(2, 2, {0, 0, 1, 1});
  const DofLayout L(2);
  auto f = [](const Point& p, double* v) {
    for (int i = 0; i < 11; ++i) v[i] = (i + 1) * p.x - i * p.y * p.y + 0.5 * i;
  };
  const DiscreteState s = project_state(m, L, f);
  const Point x{0.3, 0.6};
  const int e = locate_point(m, x).element;
  const auto v = evaluate_state(m, L, s.X, e, x);
  double ex[11];
  f(x, ex);
  for (int i = 0; i < 11; ++i) EXPECT_NEAR(v[i], ex[i], 1e-12) << "field " << i;
}
