#include "ccc/policy.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

#include "ccc/errors.hpp"

static_assert(std::numeric_limits<double>::is_iec559, "IEEE 754 doubles required");

namespace ccc {

namespace {

struct LayerDims {
  int rows = 0;
  int cols = 0;
  bool bias = false;
};

std::vector<LayerDims> layer_dims(const ArchSpec& arch) {
  std::vector<LayerDims> dims;
  if (arch.kind == ArchKind::kTabular) {
    dims.push_back({arch.actions, arch.input, false});
    return dims;
  }
  std::vector<int> sizes;
  sizes.push_back(arch.input);
  sizes.insert(sizes.end(), arch.hidden.begin(), arch.hidden.end());
  sizes.push_back(arch.actions);
  for (size_t i = 0; i + 1 < sizes.size(); ++i)
    dims.push_back({sizes[i + 1], sizes[i], true});
  return dims;
}

void validate(const ArchSpec& arch) {
  if (arch.input < 1 || arch.actions < 2)
    throw ContractError("policy needs input >= 1 and actions >= 2");
  if (arch.kind == ArchKind::kTabular && !arch.hidden.empty())
    throw ContractError("tabular policy cannot have hidden layers");
  if (arch.kind == ArchKind::kFeedforward && arch.hidden.empty())
    throw ContractError("feedforward policy needs at least one hidden layer");
  for (int h : arch.hidden)
    if (h < 1) throw ContractError("hidden layer width must be positive");
}

using ConstMat = Eigen::Map<const Eigen::MatrixXd>;
using ConstVec = Eigen::Map<const Eigen::VectorXd>;
using MutMat = Eigen::Map<Eigen::MatrixXd>;
using MutVec = Eigen::Map<Eigen::VectorXd>;

// Walks the flat parameter vector layer by layer.
template <typename Scalar, typename MatT, typename VecT>
struct Walker {
  Scalar* base;
  int offset = 0;
  MatT weights(const LayerDims& d) {
    MatT m(base + offset, d.rows, d.cols);
    offset += d.rows * d.cols;
    return m;
  }
  VecT bias(const LayerDims& d) {
    VecT v(base + offset, d.bias ? d.rows : 0);
    offset += d.bias ? d.rows : 0;
    return v;
  }
};

using ConstWalker = Walker<const double, ConstMat, ConstVec>;
using MutWalker = Walker<double, MutMat, MutVec>;

void softmax_in_place(Eigen::VectorXd& z) {
  z.array() -= z.maxCoeff();
  z = z.array().exp();
  z /= z.sum();
}

// ---- checkpoint serialization ----

constexpr char kMagic[8] = {'C', 'C', 'P', 'O', 'L', 'C', 'K', '1'};
constexpr uint32_t kFormatVersion = 1;

uint32_t crc32(const uint8_t* data, size_t len) {
  static const auto table = [] {
    std::array<uint32_t, 256> t{};
    for (uint32_t i = 0; i < 256; ++i) {
      uint32_t c = i;
      for (int k = 0; k < 8; ++k) c = (c & 1) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
      t[i] = c;
    }
    return t;
  }();
  uint32_t c = 0xFFFFFFFFu;
  for (size_t i = 0; i < len; ++i) c = table[(c ^ data[i]) & 0xFF] ^ (c >> 8);
  return c ^ 0xFFFFFFFFu;
}

void put_u32(std::string& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_u64(std::string& out, uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_f64(std::string& out, double d) {
  uint64_t v;
  std::memcpy(&v, &d, 8);
  put_u64(out, v);
}

class Reader {
 public:
  Reader(const std::string& buf, size_t pos) : buf_(buf), pos_(pos) {}
  uint32_t u32() { return static_cast<uint32_t>(u64_n(4)); }
  uint64_t u64() { return u64_n(8); }
  double f64() {
    uint64_t v = u64_n(8);
    double d;
    std::memcpy(&d, &v, 8);
    return d;
  }
  size_t pos() const { return pos_; }

 private:
  uint64_t u64_n(int n) {
    if (pos_ + n > buf_.size()) throw IoError("corrupt checkpoint: truncated");
    uint64_t v = 0;
    for (int i = 0; i < n; ++i)
      v |= static_cast<uint64_t>(static_cast<uint8_t>(buf_[pos_ + i])) << (8 * i);
    pos_ += n;
    return v;
  }
  const std::string& buf_;
  size_t pos_;
};

}  // namespace

int ArchSpec::param_count() const {
  int n = 0;
  for (const auto& d : layer_dims(*this)) n += d.rows * d.cols + (d.bias ? d.rows : 0);
  return n;
}

std::string ArchSpec::describe() const {
  if (kind == ArchKind::kTabular)
    return "tabular(" + std::to_string(input) + "->" + std::to_string(actions) + ")";
  std::string s = "feedforward(" + std::to_string(input);
  for (int h : hidden) s += "-" + std::to_string(h);
  return s + "->" + std::to_string(actions) + ")";
}

ArchSpec ArchSpec::tabular(int input, int actions) {
  ArchSpec a{ArchKind::kTabular, input, actions, {}};
  validate(a);
  return a;
}

ArchSpec ArchSpec::feedforward(int input, int actions, std::vector<int> hidden) {
  ArchSpec a{ArchKind::kFeedforward, input, actions, std::move(hidden)};
  validate(a);
  return a;
}

Policy::Policy(ArchSpec arch) : arch_(std::move(arch)) {
  validate(arch_);
  params_ = Eigen::VectorXd::Zero(arch_.param_count());
}

Policy Policy::random_init(ArchSpec arch, uint64_t seed, double scale) {
  Policy p(std::move(arch));
  Rng rng(derive_seed(seed, "policy_init"));
  for (int i = 0; i < p.params_.size(); ++i)
    p.params_[i] = (rng.next_double() * 2.0 - 1.0) * scale;
  return p;
}

void Policy::forward(std::span<const double> obs, std::span<double> probs_out) const {
  if (std::ssize(obs) != arch_.input) throw ContractError("observation length mismatch");
  if (std::ssize(probs_out) != arch_.actions) throw ContractError("probs buffer length mismatch");
  ConstWalker w{params_.data()};
  Eigen::VectorXd a = ConstVec(obs.data(), obs.size());
  auto dims = layer_dims(arch_);
  for (size_t i = 0; i < dims.size(); ++i) {
    Eigen::VectorXd z = w.weights(dims[i]) * a;
    if (dims[i].bias) z += w.bias(dims[i]);
    if (i + 1 < dims.size())
      a = z.array().tanh();
    else
      a = std::move(z);
  }
  softmax_in_place(a);
  MutVec(probs_out.data(), probs_out.size()) = a;
}

std::vector<double> Policy::forward(std::span<const double> obs) const {
  std::vector<double> probs(arch_.actions);
  forward(obs, probs);
  return probs;
}

int Policy::sample(std::span<const double> obs, Rng& rng) const {
  std::vector<double> probs = forward(obs);
  double u = rng.next_double();
  double cum = 0.0;
  for (int a = 0; a < arch_.actions; ++a) {
    cum += probs[a];
    if (u < cum) return a;
  }
  return arch_.actions - 1;
}

void Policy::grad_log_prob(std::span<const double> obs, int action,
                           std::span<double> grad_out) const {
  if (action < 0 || action >= arch_.actions) throw ContractError("action out of range");
  if (std::ssize(grad_out) != arch_.param_count())
    throw ContractError("gradient buffer length mismatch");
  auto dims = layer_dims(arch_);

  // Forward, keeping every activation for the backward sweep.
  std::vector<Eigen::VectorXd> acts;
  acts.emplace_back(ConstVec(obs.data(), obs.size()));
  {
    ConstWalker w{params_.data()};
    for (size_t i = 0; i < dims.size(); ++i) {
      Eigen::VectorXd z = w.weights(dims[i]) * acts.back();
      if (dims[i].bias) z += w.bias(dims[i]);
      if (i + 1 < dims.size()) z = z.array().tanh();
      acts.push_back(std::move(z));
    }
  }
  Eigen::VectorXd probs = acts.back();
  softmax_in_place(probs);

  Eigen::VectorXd dz = -probs;
  dz[action] += 1.0;

  // Backward: grad offsets mirror the forward parameter walk.
  std::vector<int> offsets(dims.size());
  {
    int off = 0;
    for (size_t i = 0; i < dims.size(); ++i) {
      offsets[i] = off;
      off += dims[i].rows * dims[i].cols + (dims[i].bias ? dims[i].rows : 0);
    }
  }
  MutVec grad(grad_out.data(), grad_out.size());
  grad.setZero();
  for (int i = static_cast<int>(dims.size()) - 1; i >= 0; --i) {
    const auto& d = dims[i];
    MutMat dW(grad.data() + offsets[i], d.rows, d.cols);
    dW = dz * acts[i].transpose();
    if (d.bias) MutVec(grad.data() + offsets[i] + d.rows * d.cols, d.rows) = dz;
    if (i > 0) {
      ConstMat W(params_.data() + offsets[i], d.rows, d.cols);
      Eigen::VectorXd da = W.transpose() * dz;
      dz = da.array() * (1.0 - acts[i].array().square());
    }
  }
}

double Policy::forward_batch(const Eigen::MatrixXd& obs, Eigen::MatrixXd& probs_out) const {
  if (obs.rows() != arch_.input) throw ContractError("observation length mismatch");
  auto dims = layer_dims(arch_);
  ConstWalker w{params_.data()};
  Eigen::MatrixXd a = obs;
  for (size_t i = 0; i < dims.size(); ++i) {
    Eigen::MatrixXd z = w.weights(dims[i]) * a;
    if (dims[i].bias) z.colwise() += Eigen::VectorXd(w.bias(dims[i]));
    if (i + 1 < dims.size())
      a = z.array().tanh();
    else
      a = std::move(z);
  }
  double mean_abs_logit = a.size() > 0 ? a.array().abs().mean() : 0.0;
  // Column-wise stable softmax.
  Eigen::RowVectorXd zmax = a.colwise().maxCoeff();
  a.rowwise() -= zmax;
  a = a.array().exp();
  Eigen::RowVectorXd sums = a.colwise().sum();
  a.array().rowwise() /= sums.array();
  probs_out = std::move(a);
  return mean_abs_logit;
}

void Policy::accumulate_batch_grad(const Eigen::MatrixXd& obs, const std::vector<int>& actions,
                                   const Eigen::VectorXd& coeff, double entropy_coeff,
                                   Eigen::VectorXd& grad_accum) const {
  const int n = static_cast<int>(obs.cols());
  if (std::ssize(actions) != n || coeff.size() != n)
    throw ContractError("batch gradient inputs disagree on sample count");
  if (grad_accum.size() != arch_.param_count())
    throw ContractError("gradient buffer length mismatch");
  auto dims = layer_dims(arch_);

  std::vector<Eigen::MatrixXd> acts;
  acts.reserve(dims.size() + 1);
  acts.push_back(obs);
  {
    ConstWalker w{params_.data()};
    for (size_t i = 0; i < dims.size(); ++i) {
      Eigen::MatrixXd z = w.weights(dims[i]) * acts.back();
      if (dims[i].bias) z.colwise() += Eigen::VectorXd(w.bias(dims[i]));
      if (i + 1 < dims.size()) z = z.array().tanh();
      acts.push_back(std::move(z));
    }
  }

  // Log-probabilities, then the combined dz for the score and entropy terms:
  //   dz = coeff * (onehot - p) - entropy_coeff * p .* (logp + H)
  Eigen::MatrixXd logp = acts.back();
  Eigen::RowVectorXd zmax = logp.colwise().maxCoeff();
  logp.rowwise() -= zmax;
  Eigen::RowVectorXd lse = logp.array().exp().colwise().sum().log();
  logp.rowwise() -= lse;
  Eigen::MatrixXd probs = logp.array().exp();

  Eigen::MatrixXd dz(arch_.actions, n);
  for (int i = 0; i < n; ++i) {
    dz.col(i) = -coeff[i] * probs.col(i);
    dz(actions[i], i) += coeff[i];
    if (entropy_coeff != 0.0) {
      double h = -(probs.col(i).array() * logp.col(i).array()).sum();
      dz.col(i) -= entropy_coeff * (probs.col(i).array() * (logp.col(i).array() + h)).matrix();
    }
  }

  std::vector<int> offsets(dims.size());
  {
    int off = 0;
    for (size_t i = 0; i < dims.size(); ++i) {
      offsets[i] = off;
      off += dims[i].rows * dims[i].cols + (dims[i].bias ? dims[i].rows : 0);
    }
  }
  for (int i = static_cast<int>(dims.size()) - 1; i >= 0; --i) {
    const auto& d = dims[i];
    MutMat dW(grad_accum.data() + offsets[i], d.rows, d.cols);
    dW.noalias() += dz * acts[i].transpose();
    if (d.bias)
      MutVec(grad_accum.data() + offsets[i] + d.rows * d.cols, d.rows) += dz.rowwise().sum();
    if (i > 0) {
      ConstMat W(params_.data() + offsets[i], d.rows, d.cols);
      Eigen::MatrixXd da = W.transpose() * dz;
      dz = da.array() * (1.0 - acts[i].array().square());
    }
  }
}

void Policy::save(const std::string& path) const {
  std::string body;
  put_u32(body, kFormatVersion);
  put_u32(body, arch_.kind == ArchKind::kTabular ? 0u : 1u);
  put_u32(body, static_cast<uint32_t>(arch_.input));
  put_u32(body, static_cast<uint32_t>(arch_.actions));
  put_u32(body, static_cast<uint32_t>(arch_.hidden.size()));
  for (int h : arch_.hidden) put_u32(body, static_cast<uint32_t>(h));
  put_u64(body, static_cast<uint64_t>(params_.size()));
  for (int i = 0; i < params_.size(); ++i) put_f64(body, params_[i]);

  std::string out(kMagic, sizeof(kMagic));
  out += body;
  put_u32(out, crc32(reinterpret_cast<const uint8_t*>(body.data()), body.size()));

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot open checkpoint for writing: " + path);
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw IoError("failed writing checkpoint: " + path);
}

Policy Policy::load(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open checkpoint: " + path);
  std::string buf((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());

  if (buf.size() < sizeof(kMagic) + 4 || std::memcmp(buf.data(), kMagic, sizeof(kMagic)) != 0)
    throw IoError("corrupt checkpoint: bad magic in " + path);
  size_t body_len = buf.size() - sizeof(kMagic) - 4;
  uint32_t stored_crc = Reader(buf, sizeof(kMagic) + body_len).u32();
  uint32_t actual_crc =
      crc32(reinterpret_cast<const uint8_t*>(buf.data()) + sizeof(kMagic), body_len);
  if (stored_crc != actual_crc) throw IoError("corrupt checkpoint: checksum mismatch in " + path);

  Reader r(buf, sizeof(kMagic));
  uint32_t version = r.u32();
  if (version != kFormatVersion)
    throw IoError("unsupported checkpoint version " + std::to_string(version) + " in " + path);
  uint32_t kind = r.u32();
  if (kind > 1) throw IoError("corrupt checkpoint: unknown policy kind in " + path);
  ArchSpec arch;
  arch.kind = kind == 0 ? ArchKind::kTabular : ArchKind::kFeedforward;
  arch.input = static_cast<int>(r.u32());
  arch.actions = static_cast<int>(r.u32());
  uint32_t hidden_count = r.u32();
  if (hidden_count > 64) throw IoError("corrupt checkpoint: implausible layer count in " + path);
  for (uint32_t i = 0; i < hidden_count; ++i) arch.hidden.push_back(static_cast<int>(r.u32()));
  validate(arch);
  uint64_t n = r.u64();
  if (n != static_cast<uint64_t>(arch.param_count()))
    throw IoError("corrupt checkpoint: parameter count disagrees with architecture in " + path);
  Policy p(arch);
  for (uint64_t i = 0; i < n; ++i) p.params_[static_cast<int>(i)] = r.f64();
  if (r.pos() != sizeof(kMagic) + body_len)
    throw IoError("corrupt checkpoint: trailing bytes in " + path);
  return p;
}

Policy Policy::load_expect(const std::string& path, const ArchSpec& expected) {
  Policy p = load(path);
  if (!(p.arch() == expected))
    throw ConfigError("checkpoint architecture mismatch: " + path + " holds " +
                      p.arch().describe() + ", expected " + expected.describe());
  return p;
}

double distribution_entropy(std::span<const double> probs) {
  double h = 0.0;
  for (double p : probs)
    if (p > 0.0) h -= p * std::log(p);
  return h;
}

Policy make_fixed_action_policy(int input, int actions, int action, double logit) {
  Policy p(ArchSpec::tabular(input, actions));
  MutMat W(p.params().data(), actions, input);
  W.row(action).setConstant(logit);
  return p;
}

}  // namespace ccc
