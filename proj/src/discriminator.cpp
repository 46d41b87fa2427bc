#include "delaysynth/discriminator.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>

#include "delaysynth/parallel.hpp"
#include "delaysynth/rng.hpp"
#include "json.hpp"

#include <Eigen/Dense>

namespace delaysynth {

void DiscriminatorConfig::validate() const {
  if (n_blocks < 1) throw ArgumentError("discriminator: n_blocks must be >= 1");
  if (layers_per_block < 1) throw ArgumentError("discriminator: layers_per_block must be >= 1");
  if (filters < 1) throw ArgumentError("discriminator: filters must be >= 1");
  if (kernel_size < 1 || kernel_size % 2 == 0) throw ArgumentError("discriminator: kernel_size must be odd");
  if (epochs < 1) throw ArgumentError("discriminator: epochs must be >= 1");
  if (batch_size < 1) throw ArgumentError("discriminator: batch_size must be >= 1");
  if (!(learning_rate > 0.0)) throw ArgumentError("discriminator: learning_rate must be positive");
  if (!(l2_rate >= 0.0)) throw ArgumentError("discriminator: l2_rate must be non-negative");
}

LabeledSet LabeledSet::from_classes(const Matrix& positives, const Matrix& negatives) {
  LabeledSet set{vstack(positives, negatives), {}};
  set.labels.assign(positives.rows(), true);
  set.labels.resize(positives.rows() + negatives.rows(), false);
  return set;
}

namespace {

constexpr Eigen::Index T = static_cast<Eigen::Index>(kHours);

using Activations = Eigen::MatrixXd;  // (samples * padded length) x channels, column-major
using KernelMap = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
using KernelGradMap = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

struct Conv {
  Eigen::Index in_ch = 0;
  Eigen::Index out_ch = 0;
  Eigen::Index kernel = 0;
  std::size_t w = 0;  // offset of kernel [kernel][in_ch][out_ch]
  std::size_t b = 0;  // offset of bias [out_ch]
};

struct Block {
  Eigen::Index in_ch = 0;
  std::vector<Conv> layers;
  bool projected = false;
  Conv shortcut;
};

// A batch is laid out as one long sequence: each sample occupies `stride`
// rows, its 24 hours preceded and followed by `pad` rows of zeros. A
// same-padded convolution is then a sum of shifted GEMMs over the whole batch;
// the pad rows of every output are reset to zero afterwards.
class Layout {
 public:
  Layout(Eigen::Index samples, Eigen::Index pad) : samples_(samples), pad_(pad), stride_(T + 2 * pad) {}
  Eigen::Index samples() const { return samples_; }
  Eigen::Index pad() const { return pad_; }
  Eigen::Index rows() const { return samples_ * stride_; }
  Eigen::Index first(Eigen::Index sample) const { return sample * stride_ + pad_; }

  void zero_pads(Activations& a) const {
    for (Eigen::Index s = 0; s < samples_; ++s) {
      a.middleRows(s * stride_, pad_).setZero();
      a.middleRows(first(s) + T, pad_).setZero();
    }
  }

 private:
  Eigen::Index samples_;
  Eigen::Index pad_;
  Eigen::Index stride_;
};

KernelMap kernel_tap(const double* weights, const Conv& c, Eigen::Index k) {
  return KernelMap(weights + c.w + static_cast<std::size_t>(k * c.in_ch * c.out_ch), c.in_ch, c.out_ch);
}

void conv_forward(const Layout& layout, const Activations& in, const Conv& c, const double* weights,
                  Activations& out) {
  const Eigen::Index n = layout.rows();
  const Eigen::Index p = layout.pad();
  const Eigen::Index half = c.kernel / 2;
  out.resize(n, c.out_ch);
  const Eigen::Map<const Eigen::RowVectorXd> bias(weights + c.b, c.out_ch);
  out.rowwise() = bias;
  for (Eigen::Index k = 0; k < c.kernel; ++k)
    out.middleRows(p, n - 2 * p).noalias() += in.middleRows(p - half + k, n - 2 * p) * kernel_tap(weights, c, k);
  layout.zero_pads(out);
}

// `dpre` must have zero pad rows. Accumulates parameter gradients and, when
// `din` is non-null, adds the input gradient into it (pad rows reset to zero).
void conv_backward(const Layout& layout, const Activations& in, const Conv& c, const double* weights,
                   const Activations& dpre, double* grad, Activations* din) {
  const Eigen::Index n = layout.rows();
  const Eigen::Index p = layout.pad();
  const Eigen::Index half = c.kernel / 2;
  Eigen::Map<Eigen::RowVectorXd> gb(grad + c.b, c.out_ch);
  gb += dpre.colwise().sum();
  for (Eigen::Index k = 0; k < c.kernel; ++k) {
    KernelGradMap gw(grad + c.w + static_cast<std::size_t>(k * c.in_ch * c.out_ch), c.in_ch, c.out_ch);
    gw.noalias() += in.middleRows(p - half + k, n - 2 * p).transpose() * dpre.middleRows(p, n - 2 * p);
    if (din)
      din->middleRows(p - half + k, n - 2 * p).noalias() +=
          dpre.middleRows(p, n - 2 * p) * kernel_tap(weights, c, k).transpose();
  }
  if (din) layout.zero_pads(*din);
}

class Network {
 public:
  explicit Network(const DiscriminatorConfig& cfg) : filters_(cfg.filters), pad_(cfg.kernel_size / 2) {
    std::size_t offset = 0;
    auto make = [&](Eigen::Index in_ch, Eigen::Index kernel) {
      Conv c{in_ch, filters_, kernel, offset, 0};
      offset += static_cast<std::size_t>(kernel * in_ch * filters_);
      kernel_ranges_.emplace_back(c.w, offset - c.w);
      c.b = offset;
      offset += static_cast<std::size_t>(filters_);
      return c;
    };
    Eigen::Index channels = 1;
    for (int b = 0; b < cfg.n_blocks; ++b) {
      Block block;
      block.in_ch = channels;
      for (int l = 0; l < cfg.layers_per_block; ++l)
        block.layers.push_back(make(l == 0 ? channels : filters_, cfg.kernel_size));
      if (channels != filters_) {
        block.projected = true;
        block.shortcut = make(channels, 1);
      }
      blocks_.push_back(std::move(block));
      channels = filters_;
    }
    head_w_ = offset;
    offset += static_cast<std::size_t>(filters_) * 2;
    size_ = offset + 2;
  }

  std::size_t size() const { return size_; }
  const std::vector<std::pair<std::size_t, std::size_t>>& kernel_ranges() const { return kernel_ranges_; }
  const std::vector<Block>& blocks() const { return blocks_; }

  /// Activations of one forward pass over a batch.
  struct Cache {
    std::vector<Activations> x;                  // block inputs, plus final output
    std::vector<std::vector<Activations>> post;  // post-ReLU layer outputs
    Eigen::MatrixXd pooled;                      // samples x filters
    Eigen::MatrixXd logits;                      // samples x 2
    Activations da, db, dx, scratch;
  };

  Layout layout(Eigen::Index samples) const { return Layout(samples, pad_); }

  /// `rows` index already-normalised inputs. Leaves the logits in cache.logits.
  void forward(const Matrix& inputs, std::span<const std::size_t> rows, const double* w, Cache& c) const {
    const auto samples = static_cast<Eigen::Index>(rows.size());
    const Layout lay = layout(samples);
    c.x.resize(blocks_.size() + 1);
    c.post.resize(blocks_.size());
    c.x[0].setZero(lay.rows(), 1);
    for (Eigen::Index s = 0; s < samples; ++s) {
      const auto src = inputs.row(rows[static_cast<std::size_t>(s)]);
      for (Eigen::Index t = 0; t < T; ++t) c.x[0](lay.first(s) + t, 0) = src[static_cast<std::size_t>(t)];
    }
    for (std::size_t b = 0; b < blocks_.size(); ++b) {
      const Block& block = blocks_[b];
      c.post[b].resize(block.layers.size());
      const Activations* in = &c.x[b];
      for (std::size_t l = 0; l < block.layers.size(); ++l) {
        Activations& out = c.post[b][l];
        conv_forward(lay, *in, block.layers[l], w, out);
        out = out.cwiseMax(0.0);
        in = &out;
      }
      Activations& next = c.x[b + 1];
      if (block.projected) {
        conv_forward(lay, c.x[b], block.shortcut, w, next);
        next += c.post[b].back();
      } else {
        next = c.post[b].back() + c.x[b];
      }
    }
    const Activations& out = c.x.back();
    c.pooled.resize(samples, filters_);
    for (Eigen::Index s = 0; s < samples; ++s)
      c.pooled.row(s) = out.middleRows(lay.first(s), T).colwise().sum() / static_cast<double>(T);
    const KernelMap head(w + head_w_, filters_, 2);
    const Eigen::Map<const Eigen::RowVector2d> head_bias(w + head_w_ + 2 * filters_);
    c.logits.noalias() = c.pooled * head;
    c.logits.rowwise() += head_bias;
  }

  /// Backpropagates d(loss)/d(logits) (samples x 2) through the cached pass.
  void backward(const Eigen::MatrixXd& dlogits, const double* w, Cache& c, double* grad) const {
    const Eigen::Index samples = dlogits.rows();
    const Layout lay = layout(samples);
    KernelGradMap ghead(grad + head_w_, filters_, 2);
    Eigen::Map<Eigen::RowVector2d> ghead_bias(grad + head_w_ + 2 * filters_);
    ghead.noalias() += c.pooled.transpose() * dlogits;
    ghead_bias += dlogits.colwise().sum();
    const Eigen::MatrixXd dpooled = dlogits * KernelMap(w + head_w_, filters_, 2).transpose() / static_cast<double>(T);
    c.dx.setZero(lay.rows(), filters_);
    for (Eigen::Index s = 0; s < samples; ++s) c.dx.middleRows(lay.first(s), T).rowwise() = dpooled.row(s);

    for (std::size_t bi = blocks_.size(); bi-- > 0;) {
      const Block& block = blocks_[bi];
      const bool need_input_grad = bi > 0;
      // dx holds d(loss)/d(block output) and becomes d(loss)/d(block input).
      c.da = c.dx;
      if (block.projected) {
        if (need_input_grad) {
          c.scratch.setZero(lay.rows(), block.in_ch);
          conv_backward(lay, c.x[bi], block.shortcut, w, c.da, grad, &c.scratch);
          c.dx = c.scratch;
        } else {
          conv_backward(lay, c.x[bi], block.shortcut, w, c.da, grad, nullptr);
        }
      }
      for (std::size_t l = block.layers.size(); l-- > 0;) {
        c.da = (c.post[bi][l].array() > 0.0).select(c.da, 0.0);
        const Activations& in = l == 0 ? c.x[bi] : c.post[bi][l - 1];
        if (l == 0) {
          conv_backward(lay, in, block.layers[l], w, c.da, grad, need_input_grad ? &c.dx : nullptr);
        } else {
          c.db.setZero(lay.rows(), filters_);
          conv_backward(lay, in, block.layers[l], w, c.da, grad, &c.db);
          std::swap(c.da, c.db);
        }
      }
    }
  }

 private:
  Eigen::Index filters_;
  Eigen::Index pad_;
  std::vector<Block> blocks_;
  std::vector<std::pair<std::size_t, std::size_t>> kernel_ranges_;
  std::size_t head_w_ = 0;
  std::size_t size_ = 0;
};

void check_input(const Matrix& vectors, const char* what) { require_hour_columns(vectors, what); }

// Softmax over two logits; returns {p0, p1}.
std::pair<double, double> softmax2(const double z[2]) {
  return {1.0 / (1.0 + std::exp(z[1] - z[0])), 1.0 / (1.0 + std::exp(z[0] - z[1]))};
}

// Cross-entropy of the labelled class, computed from logits.
double cross_entropy(const double z[2], bool positive) {
  const double m = std::max(z[0], z[1]);
  const double lse = m + std::log(std::exp(z[0] - m) + std::exp(z[1] - m));
  return lse - z[positive ? 1 : 0];
}

std::vector<double> normalize_row(std::span<const double> row, const DiscriminatorModel& model) {
  std::vector<double> out(kHours);
  for (std::size_t h = 0; h < kHours; ++h) out[h] = (row[h] - model.input_mean[h]) / model.input_std[h];
  return out;
}

Matrix normalize(const Matrix& vectors, const DiscriminatorModel& model) {
  Matrix out(vectors.rows(), kHours);
  for (std::size_t r = 0; r < vectors.rows(); ++r) {
    auto row = normalize_row(vectors.row(r), model);
    std::copy(row.begin(), row.end(), out.row(r).begin());
  }
  return out;
}

void fit_normalization(const Matrix& vectors, DiscriminatorModel& model) {
  const double n = static_cast<double>(vectors.rows());
  for (std::size_t h = 0; h < kHours; ++h) {
    double mean = 0.0;
    for (std::size_t r = 0; r < vectors.rows(); ++r) mean += vectors(r, h);
    mean /= n;
    double var = 0.0;
    for (std::size_t r = 0; r < vectors.rows(); ++r) var += (vectors(r, h) - mean) * (vectors(r, h) - mean);
    const double sd = std::sqrt(var / n);
    model.input_mean[h] = mean;
    model.input_std[h] = (std::isfinite(sd) && sd > 1e-12) ? sd : 1.0;
  }
}

// Loss and gradient over the rows `batch` of already-normalised inputs.
double accumulate_batch(const Network& net, const DiscriminatorModel& model, const Matrix& normalized,
                        const std::vector<bool>& labels, std::span<const std::size_t> batch, Network::Cache& cache,
                        double* grad) {
  const double scale = 1.0 / static_cast<double>(batch.size());
  const double* w = model.weights.data();
  net.forward(normalized, batch, w, cache);
  const auto samples = static_cast<Eigen::Index>(batch.size());
  Eigen::MatrixXd dlogits(samples, 2);
  double loss = 0.0;
  for (Eigen::Index s = 0; s < samples; ++s) {
    const double z[2] = {cache.logits(s, 0), cache.logits(s, 1)};
    const bool positive = labels[batch[static_cast<std::size_t>(s)]];
    loss += cross_entropy(z, positive);
    const auto [p0, p1] = softmax2(z);
    dlogits(s, 0) = (p0 - (positive ? 0.0 : 1.0)) * scale;
    dlogits(s, 1) = (p1 - (positive ? 1.0 : 0.0)) * scale;
  }
  if (grad) net.backward(dlogits, w, cache, grad);
  loss *= scale;
  const double l2 = model.cfg.l2_rate;
  if (l2 > 0.0) {
    for (const auto& [off, len] : net.kernel_ranges()) {
      for (std::size_t i = off; i < off + len; ++i) {
        loss += l2 * w[i] * w[i];
        if (grad) grad[i] += 2.0 * l2 * w[i];
      }
    }
  }
  return loss;
}

void validate_training_set(const LabeledSet& data) {
  check_input(data.vectors, "train");
  if (data.labels.size() != data.vectors.rows()) throw ArgumentError("train: label count does not match rows");
  const auto positives = std::count(data.labels.begin(), data.labels.end(), true);
  if (data.vectors.rows() < 2 || positives == 0 || positives == static_cast<long>(data.labels.size()))
    throw ArgumentError("train: both classes must be present");
  for (double v : data.vectors.data())
    if (!std::isfinite(v)) throw ArgumentError("train: non-finite input value");
}

}  // namespace

std::size_t weight_count(const DiscriminatorConfig& cfg) {
  cfg.validate();
  return Network(cfg).size();
}

DiscriminatorModel initial_model(const DiscriminatorConfig& cfg) {
  cfg.validate();
  const Network net(cfg);
  DiscriminatorModel model{cfg, std::vector<double>(net.size(), 0.0), std::vector<double>(kHours, 0.0),
                           std::vector<double>(kHours, 1.0)};
  Rng rng(derive_seed(cfg.rng_seed, {0}));
  auto he_init = [&](const Conv& c) {
    const double sd = std::sqrt(2.0 / (static_cast<double>(c.kernel) * c.in_ch));
    const std::size_t n = static_cast<std::size_t>(c.kernel) * c.in_ch * c.out_ch;
    for (std::size_t i = 0; i < n; ++i) model.weights[c.w + i] = sd * rng.normal();
  };
  for (const auto& block : net.blocks()) {
    for (const auto& layer : block.layers) he_init(layer);
    if (block.projected) he_init(block.shortcut);
  }
  return model;
}

DiscriminatorModel train(const LabeledSet& data, const DiscriminatorConfig& cfg) {
  cfg.validate();
  validate_training_set(data);
  const Network net(cfg);
  DiscriminatorModel model = initial_model(cfg);
  fit_normalization(data.vectors, model);
  const Matrix normalized = normalize(data.vectors, model);

  // Canonical order first, so the result depends on the multiset of rows and the seed only.
  std::vector<std::size_t> order(data.vectors.rows());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (data.labels[a] != data.labels[b]) return data.labels[a] < data.labels[b];
    auto ra = data.vectors.row(a);
    auto rb = data.vectors.row(b);
    return std::lexicographical_compare(ra.begin(), ra.end(), rb.begin(), rb.end());
  });

  constexpr double beta1 = 0.9;
  constexpr double beta2 = 0.999;
  constexpr double eps = 1e-8;
  const std::size_t n_weights = net.size();
  std::vector<double> grad(n_weights), m1(n_weights, 0.0), m2(n_weights, 0.0);
  Network::Cache cache;
  Rng shuffle_rng(derive_seed(cfg.rng_seed, {1}));
  double b1_pow = 1.0;
  double b2_pow = 1.0;
  const auto batch = static_cast<std::size_t>(cfg.batch_size);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    shuffle(order.begin(), order.end(), shuffle_rng);
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t end = std::min(order.size(), start + batch);
      std::fill(grad.begin(), grad.end(), 0.0);
      accumulate_batch(net, model, normalized, data.labels,
                       std::span<const std::size_t>(order.data() + start, end - start), cache, grad.data());
      b1_pow *= beta1;
      b2_pow *= beta2;
      const double lr_t = cfg.learning_rate * std::sqrt(1.0 - b2_pow) / (1.0 - b1_pow);
      const double eps_t = eps * std::sqrt(1.0 - b2_pow);
      for (std::size_t i = 0; i < n_weights; ++i) {
        m1[i] = beta1 * m1[i] + (1.0 - beta1) * grad[i];
        m2[i] = beta2 * m2[i] + (1.0 - beta2) * grad[i] * grad[i];
        model.weights[i] -= lr_t * m1[i] / (std::sqrt(m2[i]) + eps_t);
      }
    }
  }
  return model;
}

Matrix predict_classes(const DiscriminatorModel& model, const Matrix& vectors) {
  check_input(vectors, "predict");
  const Network net(model.cfg);
  if (model.weights.size() != net.size()) throw ArgumentError("predict: weight count does not match config");
  const Matrix normalized = normalize(vectors, model);
  Network::Cache cache;
  Matrix out(vectors.rows(), 2);
  constexpr std::size_t chunk = 256;
  std::vector<std::size_t> rows;
  for (std::size_t start = 0; start < vectors.rows(); start += chunk) {
    rows.resize(std::min(chunk, vectors.rows() - start));
    std::iota(rows.begin(), rows.end(), start);
    net.forward(normalized, rows, model.weights.data(), cache);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const auto s = static_cast<Eigen::Index>(i);
      const double z[2] = {cache.logits(s, 0), cache.logits(s, 1)};
      const auto [p0, p1] = softmax2(z);
      out(start + i, 0) = p0;
      out(start + i, 1) = p1;
    }
  }
  return out;
}

std::vector<double> predict(const DiscriminatorModel& model, const Matrix& vectors) {
  return predict_classes(model, vectors).column(1);
}

double accuracy(const DiscriminatorModel& model, const LabeledSet& data) {
  if (data.vectors.rows() == 0) throw ArgumentError("accuracy: empty set");
  const auto p = predict(model, data.vectors);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < p.size(); ++i)
    if (data.labels[i] ? p[i] > 0.5 : p[i] < 0.5) ++correct;
  return static_cast<double>(correct) / static_cast<double>(p.size());
}

double batch_loss(const DiscriminatorModel& model, const LabeledSet& data, std::vector<double>* gradient) {
  check_input(data.vectors, "batch_loss");
  const Network net(model.cfg);
  if (model.weights.size() != net.size()) throw ArgumentError("batch_loss: weight count does not match config");
  const Matrix normalized = normalize(data.vectors, model);
  std::vector<std::size_t> all(data.vectors.rows());
  std::iota(all.begin(), all.end(), 0);
  Network::Cache cache;
  if (gradient) gradient->assign(net.size(), 0.0);
  return accumulate_batch(net, model, normalized, data.labels, all, cache, gradient ? gradient->data() : nullptr);
}

namespace {

constexpr char kModelMagic[8] = {'D', 'S', 'Y', 'N', 'D', 'I', 'S', 'C'};

void write_le_u32(std::ostream& out, std::uint32_t v) {
  const unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                              static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

void write_le_f64(std::ostream& out, double v) {
  auto bits = std::bit_cast<std::uint64_t>(v);
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(bits >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 8);
}

}  // namespace

void save_model(const DiscriminatorModel& model, const std::filesystem::path& path) {
  nlohmann::json header;
  const auto& c = model.cfg;
  header["config"] = {{"n_blocks", c.n_blocks},         {"layers_per_block", c.layers_per_block},
                      {"filters", c.filters},           {"kernel_size", c.kernel_size},
                      {"epochs", c.epochs},             {"learning_rate", c.learning_rate},
                      {"l2_rate", c.l2_rate},           {"batch_size", c.batch_size},
                      {"rng_seed", c.rng_seed}};
  header["input_mean"] = model.input_mean;
  header["input_std"] = model.input_std;
  header["weight_count"] = model.weights.size();
  const std::string text = header.dump();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(kModelMagic, sizeof kModelMagic);
  write_le_u32(out, static_cast<std::uint32_t>(text.size()));
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (double w : model.weights) write_le_f64(out, w);
  if (!out) throw IoError("failed writing " + path.string());
}

DiscriminatorModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  char magic[8];
  unsigned char len_bytes[4];
  if (!in.read(magic, 8) || std::memcmp(magic, kModelMagic, 8) != 0) throw FormatError("not a discriminator model file");
  if (!in.read(reinterpret_cast<char*>(len_bytes), 4)) throw FormatError("truncated model header");
  const std::uint32_t len = len_bytes[0] | (len_bytes[1] << 8) | (len_bytes[2] << 16) |
                            (static_cast<std::uint32_t>(len_bytes[3]) << 24);
  std::string text(len, '\0');
  if (!in.read(text.data(), len)) throw FormatError("truncated model header");
  DiscriminatorModel model;
  try {
    const auto header = nlohmann::json::parse(text);
    const auto& c = header.at("config");
    model.cfg.n_blocks = c.at("n_blocks");
    model.cfg.layers_per_block = c.at("layers_per_block");
    model.cfg.filters = c.at("filters");
    model.cfg.kernel_size = c.at("kernel_size");
    model.cfg.epochs = c.at("epochs");
    model.cfg.learning_rate = c.at("learning_rate");
    model.cfg.l2_rate = c.at("l2_rate");
    model.cfg.batch_size = c.at("batch_size");
    model.cfg.rng_seed = c.at("rng_seed");
    model.input_mean = header.at("input_mean").get<std::vector<double>>();
    model.input_std = header.at("input_std").get<std::vector<double>>();
    const std::size_t count = header.at("weight_count");
    if (count != weight_count(model.cfg)) throw FormatError("weight count does not match config");
    model.weights.resize(count);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("bad model header: ") + e.what());
  }
  if (model.input_mean.size() != kHours || model.input_std.size() != kHours)
    throw FormatError("normalisation must have 24 entries");
  for (double& w : model.weights) {
    unsigned char b[8];
    if (!in.read(reinterpret_cast<char*>(b), 8)) throw FormatError("truncated weight array");
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    w = std::bit_cast<double>(bits);
  }
  return model;
}

ScoreDistribution summarize_scores(std::vector<double> scores) {
  if (scores.empty()) throw ArgumentError("summarize_scores: empty distribution");
  ScoreDistribution out;
  out.min = *std::min_element(scores.begin(), scores.end());
  out.max = *std::max_element(scores.begin(), scores.end());
  out.median = median(scores);
  out.scores = std::move(scores);
  return out;
}

ScoreDistribution holdout_accuracy(const Matrix& positives, const Matrix& negatives, const DiscriminatorConfig& cfg,
                                   int n_repeats, int threads) {
  check_input(positives, "holdout_accuracy");
  check_input(negatives, "holdout_accuracy");
  if (positives.rows() < 2 || negatives.rows() < 2)
    throw ArgumentError("holdout_accuracy: need at least 2 rows per class");
  if (n_repeats < 1) throw ArgumentError("holdout_accuracy: n_repeats must be >= 1");
  cfg.validate();

  std::vector<double> scores(static_cast<std::size_t>(n_repeats));
  parallel_for(scores.size(), threads, [&](std::size_t r) {
    Rng split_rng(derive_seed(cfg.rng_seed, {2, r}));
    auto permutation = [&](std::size_t n) {
      std::vector<std::size_t> idx(n);
      std::iota(idx.begin(), idx.end(), 0);
      shuffle(idx.begin(), idx.end(), split_rng);
      return idx;
    };
    // Equal-sized classes share one permutation, so row i of each class lands
    // on the same side of the split and duplicated rows cannot leak.
    const auto pos_idx = permutation(positives.rows());
    const auto neg_idx = negatives.rows() == positives.rows() ? pos_idx : permutation(negatives.rows());
    auto halves = [](const Matrix& m, std::span<const std::size_t> idx) {
      const std::size_t half = m.rows() / 2;
      return std::pair{take_rows(m, idx.first(half)), take_rows(m, idx.subspan(half))};
    };
    auto [pos_train, pos_test] = halves(positives, pos_idx);
    auto [neg_train, neg_test] = halves(negatives, neg_idx);
    DiscriminatorConfig run_cfg = cfg;
    run_cfg.rng_seed = derive_seed(cfg.rng_seed, {3, r});
    const auto model = train(LabeledSet::from_classes(pos_train, neg_train), run_cfg);
    scores[r] = accuracy(model, LabeledSet::from_classes(pos_test, neg_test));
  });
  return summarize_scores(std::move(scores));
}

ScoreDistribution discriminative_score(const Matrix& real, const Matrix& synthetic, const DiscriminatorConfig& cfg,
                                       int n_repeats, int threads) {
  if (real.rows() == 0 || synthetic.rows() == 0) throw ArgumentError("discriminative_score: empty input");
  return holdout_accuracy(real, synthetic, cfg, n_repeats, threads);
}

}  // namespace delaysynth
