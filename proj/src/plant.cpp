#include "flexstage/plant.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "flexstage/error.hpp"
#include "flexstage/parallel.hpp"

namespace flexstage {

std::vector<std::string> channel_labels(int n_controlled) {
  std::vector<std::string> labels = {"x", "y", "z", "rx", "ry", "rz"};
  for (int i = 0; i < n_controlled; ++i) {
    labels.push_back("flex" + std::to_string(i + 1));
  }
  return labels;
}

Eigen::MatrixXd PlantModel::a() const {
  const int k = static_cast<int>(terms.size());
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(2 * k, 2 * k);
  for (int i = 0; i < k; ++i) {
    out(2 * i, 2 * i + 1) = 1.0;
    out(2 * i + 1, 2 * i) = -terms[i].omega * terms[i].omega;
    out(2 * i + 1, 2 * i + 1) = -2.0 * terms[i].zeta * terms[i].omega;
  }
  return out;
}

Eigen::MatrixXd PlantModel::b() const {
  const int k = static_cast<int>(terms.size());
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(2 * k, n_inputs());
  for (int i = 0; i < k; ++i) out.row(2 * i + 1) = terms[i].input;
  return out;
}

Eigen::MatrixXd PlantModel::c() const {
  const int k = static_cast<int>(terms.size());
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n_outputs(), 2 * k);
  for (int i = 0; i < k; ++i) out.col(2 * i) = terms[i].output;
  return out;
}

namespace {

Complex modal_denominator(double w, double z, double omega) {
  const Complex s(0.0, omega);
  return s * s + 2.0 * z * w * s + w * w;
}

void check_frequency(double omega) {
  if (!(omega > 0.0) || !std::isfinite(omega)) {
    throw Error(ErrorKind::kInvalidArgument,
                "frequency response needs finite ω > 0");
  }
}

}  // namespace

Eigen::MatrixXcd PlantModel::response(double omega) const {
  check_frequency(omega);
  Eigen::MatrixXcd g = Eigen::MatrixXcd::Zero(n_outputs(), n_inputs());
  for (const auto& t : terms) {
    const Complex h = 1.0 / modal_denominator(t.omega, t.zeta, omega);
    g += h * (t.output * t.input).cast<Complex>();
  }
  return g;
}

Eigen::MatrixXcd PlantModel::response_state_space(double omega) const {
  check_frequency(omega);
  const Eigen::MatrixXd am = a();
  const Eigen::MatrixXcd resolvent =
      Complex(0.0, omega) * Eigen::MatrixXcd::Identity(am.rows(), am.cols()) -
      am.cast<Complex>();
  return c().cast<Complex>() *
         resolvent.partialPivLu().solve(b().cast<Complex>());
}

namespace {

std::string singular_report(const Eigen::VectorXd& s) {
  std::ostringstream os;
  os << "singular values [";
  for (int i = 0; i < s.size(); ++i) os << (i ? ", " : "") << s[i];
  os << "]";
  return os.str();
}

void require_rank(const Eigen::MatrixXd& m, int rank, const std::string& what) {
  const Eigen::VectorXd s = Eigen::JacobiSVD<Eigen::MatrixXd>(m).singularValues();
  const double tol = 1e-10 * (s.size() ? s[0] : 0.0);
  int r = 0;
  for (int i = 0; i < s.size(); ++i) r += s[i] > tol ? 1 : 0;
  if (r < rank) {
    throw Error(ErrorKind::kRankDeficient,
                what + " has rank " + std::to_string(r) + " < " +
                    std::to_string(rank) + "; " + singular_report(s));
  }
}

}  // namespace

PlantModel assemble_plant(const ModalModel& model,
                          const PlacementConfig& placement, int n_controlled) {
  if (n_controlled < 0 || n_controlled > model.flexible_count()) {
    throw Error(ErrorKind::kInvalidArgument,
                "n_controlled exceeds the retained flexible modes");
  }
  placement.validate(model.geometry, n_controlled);
  PlantModel p;
  p.rigid = model.rigid_body;
  p.n_controlled = n_controlled;
  p.input_map = actuation_map(model, placement.actuators);
  p.output_map = sensing_map(model, placement.sensors);
  require_rank(p.input_map.topRows(kRigidDofs), kRigidDofs,
               "rigid-body input map");

  const int k = static_cast<int>(p.input_map.rows());
  for (int i = 0; i < k; ++i) {
    ModalTerm t;
    if (i >= kRigidDofs) {
      const Mode& m = model.flexible(i - kRigidDofs);
      t.omega = m.omega;
      t.zeta = m.zeta;
    }
    t.output = p.output_map.col(i);
    t.input = p.input_map.row(i);
    p.terms.push_back(std::move(t));
  }
  return p;
}

Eigen::MatrixXd pseudo_inverse(const Eigen::MatrixXd& a, double rel_tol) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd& s = svd.singularValues();
  const double tol = rel_tol * (s.size() ? s[0] : 0.0);
  Eigen::VectorXd inv(s.size());
  for (int i = 0; i < s.size(); ++i) inv[i] = s[i] > tol ? 1.0 / s[i] : 0.0;
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

DecouplingPair decoupling_matrices(const PlantModel& plant,
                                   std::vector<int> controlled_modes) {
  if (controlled_modes.empty()) {
    for (int i = 0; i < plant.n_controlled; ++i) controlled_modes.push_back(i);
  }
  DecouplingPair pair;
  for (int i = 0; i < kRigidDofs; ++i) pair.selection.push_back(i);
  for (int m : controlled_modes) {
    if (m < 0 || m >= plant.flexible_count()) {
      throw Error(ErrorKind::kInvalidArgument,
                  "controlled mode index out of range");
    }
    pair.selection.push_back(kRigidDofs + m);
  }
  pair.channel_labels = {"x", "y", "z", "rx", "ry", "rz"};
  for (int m : controlled_modes) {
    pair.channel_labels.push_back("flex" + std::to_string(m + 1));
  }

  const int ch = pair.channel_count();
  Eigen::MatrixXd c_sel(plant.n_outputs(), ch);
  Eigen::MatrixXd b_sel(ch, plant.n_inputs());
  for (int k = 0; k < ch; ++k) {
    c_sel.col(k) = plant.output_map.col(pair.selection[k]);
    b_sel.row(k) = plant.input_map.row(pair.selection[k]);
  }
  require_rank(c_sel, ch, "selected sensing map C_s Φ_sel");
  require_rank(b_sel, ch, "selected actuation map Φ_selᵀ B_a");
  pair.t_y = pseudo_inverse(c_sel);
  pair.t_u = pseudo_inverse(b_sel);
  return pair;
}

Complex ChannelPlant::response(double omega) const {
  check_frequency(omega);
  Complex g = rigid_residue / Complex(-omega * omega, 0.0);
  for (const auto& t : modes) {
    g += t.residue / modal_denominator(t.omega, t.zeta, omega);
  }
  return g;
}

void ChannelPlant::state_space(Eigen::MatrixXd& a, Eigen::VectorXd& b,
                               Eigen::RowVectorXd& c) const {
  const int blocks = (rigid_residue != 0.0 ? 1 : 0) + static_cast<int>(modes.size());
  a = Eigen::MatrixXd::Zero(2 * blocks, 2 * blocks);
  b = Eigen::VectorXd::Zero(2 * blocks);
  c = Eigen::RowVectorXd::Zero(2 * blocks);
  int k = 0;
  auto block = [&](double w, double z, double r) {
    a(2 * k, 2 * k + 1) = 1.0;
    a(2 * k + 1, 2 * k) = -w * w;
    a(2 * k + 1, 2 * k + 1) = -2.0 * z * w;
    b[2 * k + 1] = 1.0;
    c[2 * k] = r;
    ++k;
  };
  if (rigid_residue != 0.0) block(0.0, 0.0, rigid_residue);
  for (const auto& t : modes) block(t.omega, t.zeta, t.residue);
}

ChannelPlant double_integrator(double mass) {
  if (!(mass > 0.0)) {
    throw Error(ErrorKind::kInvalidArgument, "mass must be > 0");
  }
  ChannelPlant p;
  p.label = "double_integrator";
  p.rigid_residue = 1.0 / mass;
  return p;
}

ChannelPlant channel_plant(const PlantModel& plant, const DecouplingPair& pair,
                           int channel) {
  if (channel < 0 || channel >= pair.channel_count()) {
    throw Error(ErrorKind::kInvalidArgument, "channel index out of range");
  }
  const Eigen::RowVectorXd cy = pair.t_y.row(channel) * plant.output_map;
  const Eigen::VectorXd bu = plant.input_map * pair.t_u.col(channel);
  ChannelPlant g;
  g.label = pair.channel_labels[channel];
  for (int j = 0; j < kRigidDofs; ++j) g.rigid_residue += cy[j] * bu[j];
  double scale = std::abs(g.rigid_residue);
  for (int i = kRigidDofs; i < static_cast<int>(plant.terms.size()); ++i) {
    const double r = cy[i] * bu[i];
    scale = std::max(scale, std::abs(r));
    g.modes.push_back({plant.terms[i].omega, plant.terms[i].zeta, r});
  }
  const double cut = 1e-10 * scale;
  if (std::abs(g.rigid_residue) < cut) g.rigid_residue = 0.0;
  for (auto& t : g.modes) {
    if (std::abs(t.residue) < cut) t.residue = 0.0;
  }
  return g;
}

Eigen::MatrixXcd decoupled_response(const PlantModel& plant,
                                    const DecouplingPair& pair, double omega) {
  return pair.t_y.cast<Complex>() * plant.response(omega) *
         pair.t_u.cast<Complex>();
}

Eigen::VectorXd log_grid(double lo, double hi, int per_decade) {
  if (!(lo > 0.0 && hi > lo) || per_decade < 1) {
    throw Error(ErrorKind::kInvalidArgument,
                "log grid needs 0 < lo < hi and >= 1 point per decade");
  }
  const double decades = std::log10(hi / lo);
  const int n = static_cast<int>(std::ceil(per_decade * decades - 1e-9)) + 1;
  Eigen::VectorXd g(n);
  for (int i = 0; i < n; ++i) {
    g[i] = lo * std::pow(10.0, decades * i / (n - 1));
  }
  g[n - 1] = hi;
  return g;
}

Eigen::VectorXd default_grid() {
  return log_grid(2.0 * M_PI * 0.1, 2.0 * M_PI * 2000.0, 400);
}

FrequencyResponse frequency_response(const ChannelPlant& plant,
                                     const Eigen::VectorXd& grid) {
  FrequencyResponse f{grid, Eigen::VectorXcd(grid.size())};
  for (int i = 0; i < grid.size(); ++i) f.values[i] = plant.response(grid[i]);
  return f;
}

FrequencyResponse frequency_response(const PlantModel& plant, int row, int col,
                                     const Eigen::VectorXd& grid) {
  FrequencyResponse f{grid, Eigen::VectorXcd(grid.size())};
  for (int i = 0; i < grid.size(); ++i) {
    const double w = grid[i];
    check_frequency(w);
    Complex g = 0.0;
    for (const auto& t : plant.terms) {
      g += t.output[row] * t.input[col] / modal_denominator(t.omega, t.zeta, w);
    }
    f.values[i] = g;
  }
  return f;
}

FrequencyResponse frequency_response_state_space(const PlantModel& plant,
                                                 int row, int col,
                                                 const Eigen::VectorXd& grid) {
  FrequencyResponse f{grid, Eigen::VectorXcd(grid.size())};
  const Eigen::MatrixXd am = plant.a();
  const Eigen::VectorXcd bcol = plant.b().col(col).cast<Complex>();
  const Eigen::RowVectorXcd crow = plant.c().row(row).cast<Complex>();
  for (int i = 0; i < grid.size(); ++i) {
    check_frequency(grid[i]);
    const Eigen::MatrixXcd resolvent =
        Complex(0.0, grid[i]) * Eigen::MatrixXcd::Identity(am.rows(), am.cols()) -
        am.cast<Complex>();
    f.values[i] = crow * resolvent.partialPivLu().solve(bcol);
  }
  return f;
}

std::vector<Eigen::MatrixXcd> plant_response(const PlantModel& plant,
                                             const Eigen::VectorXd& grid) {
  std::vector<Eigen::MatrixXcd> out(grid.size());
  parallel_for(static_cast<int>(grid.size()),
               [&](int i) { out[i] = plant.response(grid[i]); });
  return out;
}

std::vector<Eigen::MatrixXcd> plant_response_serial(const PlantModel& plant,
                                                    const Eigen::VectorXd& grid) {
  std::vector<Eigen::MatrixXcd> out(grid.size());
  serial_for(static_cast<int>(grid.size()),
             [&](int i) { out[i] = plant.response(grid[i]); });
  return out;
}

void write_frf_csv(const std::string& path, const FrequencyResponse& frf) {
  std::ofstream os(path);
  if (!os) throw Error(ErrorKind::kIo, "cannot write " + path);
  os << "frequency_hz,re,im\n" << std::setprecision(17);
  for (int i = 0; i < frf.omega.size(); ++i) {
    os << frf.omega[i] / (2.0 * M_PI) << ',' << frf.values[i].real() << ','
       << frf.values[i].imag() << '\n';
  }
}

FrequencyResponse read_frf_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error(ErrorKind::kIo, "cannot read " + path);
  std::string line;
  int line_no = 1;
  if (!std::getline(is, line) || line != "frequency_hz,re,im") {
    throw Error(ErrorKind::kIo,
                path + ":1: expected header 'frequency_hz,re,im'");
  }
  std::vector<double> w;
  std::vector<Complex> v;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ls(line);
    double f, re, im;
    char c1 = 0, c2 = 0;
    std::string rest;
    if (!(ls >> f >> c1 >> re >> c2 >> im) || c1 != ',' || c2 != ',' ||
        (ls >> rest)) {
      throw Error(ErrorKind::kIo, path + ":" + std::to_string(line_no) +
                                      ": expected three comma-separated numbers");
    }
    if (!(f > 0.0) || (!w.empty() && 2.0 * M_PI * f <= w.back()) ||
        !std::isfinite(re) || !std::isfinite(im)) {
      throw Error(ErrorKind::kIo, path + ":" + std::to_string(line_no) +
                                      ": frequency must be positive and "
                                      "increasing, values finite");
    }
    w.push_back(2.0 * M_PI * f);
    v.push_back({re, im});
  }
  FrequencyResponse frf;
  frf.omega = Eigen::Map<Eigen::VectorXd>(w.data(), w.size());
  frf.values = Eigen::Map<Eigen::VectorXcd>(v.data(), v.size());
  return frf;
}

}  // namespace flexstage
