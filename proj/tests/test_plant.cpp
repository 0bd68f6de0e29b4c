#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include <Eigen/Dense>

#include "flexstage/error.hpp"
#include "flexstage/plant.hpp"

using namespace flexstage;
namespace fs = std::filesystem;

namespace {

const ModalModel& stage_model() {
  static const ModalModel model = [] {
    RibbedStageOptions o;
    o.nx = o.ny = 10;
    return analyze_geometry(make_ribbed_stage(o), Material{}, 9);
  }();
  return model;
}

const PlantModel& stage_plant() {
  static const PlantModel plant =
      assemble_plant(stage_model(), default_placement(stage_model().geometry), 1);
  return plant;
}

double rel(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b) {
  return (a - b).norm() / b.norm();
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "flexstage_test_plant";
  fs::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST(Plant, ModalSumMatchesStateSpaceResolvent) {
  const PlantModel& p = stage_plant();
  for (double hz : {0.3, 12.0, 47.0, 180.0, 950.0}) {
    const double w = 2.0 * M_PI * hz;
    EXPECT_LT(rel(p.response(w), p.response_state_space(w)), 1e-9) << hz << " Hz";
  }
}

TEST(Plant, RealizationHasModalBlocks) {
  const PlantModel& p = stage_plant();
  const Eigen::MatrixXd a = p.a();
  const int k = static_cast<int>(p.terms.size());
  ASSERT_EQ(a.rows(), 2 * k);
  for (int i = 0; i < k; ++i) {
    EXPECT_EQ(a(2 * i, 2 * i + 1), 1.0);
    EXPECT_DOUBLE_EQ(a(2 * i + 1, 2 * i), -p.terms[i].omega * p.terms[i].omega);
    EXPECT_DOUBLE_EQ(a(2 * i + 1, 2 * i + 1), -2.0 * p.terms[i].zeta * p.terms[i].omega);
  }
  for (int i = 0; i < kRigidDofs; ++i) EXPECT_EQ(p.terms[i].omega, 0.0);
}

TEST(Plant, DoubleIntegratorResponse) {
  const ChannelPlant di = double_integrator(1.0);
  EXPECT_NEAR(std::abs(di.response(1.0) - Complex(-1.0, 0.0)), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(double_integrator(4.0).response(0.5) - Complex(-1.0, 0.0)), 0.0, 1e-15);
  EXPECT_EQ(di.origin_poles(), 2);
}

TEST(Plant, ChannelStateSpaceAgreesWithModalForm) {
  const PlantModel& p = stage_plant();
  const DecouplingPair pair = decoupling_matrices(p);
  const ChannelPlant ch = channel_plant(p, pair, 1);
  Eigen::MatrixXd a;
  Eigen::VectorXd b;
  Eigen::RowVectorXd c;
  ch.state_space(a, b, c);
  const int n = a.rows();
  for (double w : {3.0, 300.0, 3000.0}) {
    const Eigen::MatrixXcd res =
        (Complex(0.0, w) * Eigen::MatrixXcd::Identity(n, n) - a.cast<Complex>()).inverse();
    const Complex g = (c.cast<Complex>() * res * b.cast<Complex>())(0, 0);
    EXPECT_LT(std::abs(g - ch.response(w)), 1e-9 * std::abs(g));
  }
}

TEST(Decoupling, DiagonalMatchesChannelPlants) {
  const PlantModel& p = stage_plant();
  const DecouplingPair pair = decoupling_matrices(p);
  ASSERT_EQ(pair.channel_count(), 7);
  EXPECT_EQ(pair.channel_labels.back(), "flex1");
  for (double hz : {2.0, 40.0, 400.0}) {
    const double w = 2.0 * M_PI * hz;
    const Eigen::MatrixXcd g = decoupled_response(p, pair, w);
    EXPECT_LT(rel(g, pair.t_y.cast<Complex>() * p.response(w) * pair.t_u.cast<Complex>()), 1e-12);
    for (int k = 0; k < 7; ++k) {
      const Complex d = channel_plant(p, pair, k).response(w);
      EXPECT_LT(std::abs(g(k, k) - d), 1e-8 * std::abs(d)) << pair.channel_labels[k];
    }
  }
}

TEST(Decoupling, SelectedCoordinatesInvertExactly) {
  const PlantModel& p = stage_plant();
  const DecouplingPair pair = decoupling_matrices(p);
  Eigen::MatrixXd c_sel(p.n_outputs(), 7), b_sel(7, p.n_inputs());
  for (int k = 0; k < 7; ++k) {
    c_sel.col(k) = p.output_map.col(pair.selection[k]);
    b_sel.row(k) = p.input_map.row(pair.selection[k]);
  }
  EXPECT_LT((pair.t_y * c_sel - Eigen::MatrixXd::Identity(7, 7)).norm(), 1e-9);
  EXPECT_LT((b_sel * pair.t_u - Eigen::MatrixXd::Identity(7, 7)).norm(), 1e-9);
  // Rigid channels see 1/s² at low frequency in mass-normalized units.
  const ChannelPlant x = channel_plant(p, pair, 0);
  EXPECT_NEAR(x.rigid_residue, 1.0, 1e-9);
}

TEST(Decoupling, RankDeficientPlacementReported) {
  const ModalModel& m = stage_model();
  PlacementConfig c = default_placement(m.geometry);
  for (auto& g : c.actuators) g.direction = Eigen::Vector3d::UnitZ();
  try {
    const PlantModel p = assemble_plant(m, c, 1);
    decoupling_matrices(p);
    FAIL() << "expected a rank error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kRankDeficient);
    EXPECT_NE(std::string(e.what()).find("rank"), std::string::npos);
  }
}

TEST(PseudoInverse, PenroseConditionsAndOracle) {
  Eigen::MatrixXd a(5, 3);
  a << 1, 2, 3, 4, 5, 6, 7, 8, 9, 1, 0, 1, 2, 2, 2;
  const Eigen::MatrixXd x = pseudo_inverse(a);
  EXPECT_LT((a * x * a - a).norm(), 1e-10);
  EXPECT_LT((x * a * x - x).norm(), 1e-10);
  EXPECT_LT((a * x - (a * x).transpose()).norm(), 1e-10);
  EXPECT_LT((x * a - (x * a).transpose()).norm(), 1e-10);
  EXPECT_LT((x - a.completeOrthogonalDecomposition().pseudoInverse()).norm(), 1e-10);

  Eigen::MatrixXd r(3, 3);
  r << 1, 2, 3, 2, 4, 6, 1, 0, 1;  // rank 2
  const Eigen::MatrixXd y = pseudo_inverse(r);
  EXPECT_LT((r * y * r - r).norm(), 1e-10);
}

TEST(FrequencyGrid, LogGridEndpointsAndDensity) {
  const Eigen::VectorXd g = log_grid(1.0, 1000.0, 10);
  EXPECT_EQ(g.size(), 31);
  EXPECT_DOUBLE_EQ(g[0], 1.0);
  EXPECT_NEAR(g[g.size() - 1], 1000.0, 1e-9);
  for (int i = 1; i < g.size(); ++i) EXPECT_NEAR(g[i] / g[i - 1], std::pow(10.0, 0.1), 1e-12);
}

TEST(FrequencyResponse, ParallelIdenticalToSerial) {
  const PlantModel& p = stage_plant();
  const Eigen::VectorXd grid = log_grid(1.0, 1e4, 50);
  const auto a = plant_response(p, grid);
  const auto b = plant_response_serial(p, grid);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i], b[i]);
  const FrequencyResponse e = frequency_response(p, 2, 0, grid);
  const FrequencyResponse s = frequency_response_state_space(p, 2, 0, grid);
  EXPECT_LT((e.values - s.values).norm(), 1e-9 * s.values.norm());
}

TEST(FrfCsv, RoundTripIsExact) {
  FrequencyResponse f;
  f.omega = log_grid(1.0, 100.0, 7);
  f.values.resize(f.omega.size());
  for (int i = 0; i < f.omega.size(); ++i) f.values[i] = Complex(1.0 / (i + 3.0), -std::sqrt(i + 0.5));
  const std::string path = scratch("frf.csv").string();
  write_frf_csv(path, f);
  const FrequencyResponse g = read_frf_csv(path);
  ASSERT_EQ(g.omega.size(), f.omega.size());
  EXPECT_LT((g.omega - f.omega).cwiseAbs().maxCoeff(), 1e-12 * f.omega.maxCoeff());
  EXPECT_EQ(g.values, f.values);
}

TEST(FrfCsv, BadLineNamed) {
  const fs::path path = scratch("bad.csv");
  {
    std::ofstream os(path);
    os << "frequency_hz,re,im\n1,0.5,0.1\n2,zero,0\n";
  }
  try {
    read_frf_csv(path.string());
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kIo);
    EXPECT_NE(std::string(e.what()).find(":3"), std::string::npos) << e.what();
  }
  EXPECT_THROW(read_frf_csv((fs::temp_directory_path() / "no_such_frf.csv").string()), Error);
}
