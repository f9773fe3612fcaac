#include <algorithm>
#include <cmath>
#include <numeric>

#include "ml_internal.hpp"

namespace twinpot::ml::internal {

namespace {

constexpr double kClip = 5.0;

std::vector<int> epoch_order(std::size_t n, Rng& rng) {
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  rng.shuffle(order);
  return order;
}

void init_uniform(std::vector<double>& w, double scale, Rng& rng) {
  for (auto& v : w) v = rng.uniform(-scale, scale);
}

}  // namespace

// ---- MLP -------------------------------------------------------------------

std::unique_ptr<Mlp> Mlp::fit(const TrainData& data, int hidden, int epochs, double rate,
                              std::uint64_t seed) {
  auto model = std::make_unique<Mlp>();
  model->scaler_.fit(data.x);
  const auto z = model->scaler_.transform_all(data.x);
  const int n = static_cast<int>(z.size());
  const int in = static_cast<int>(z[0].size());
  const int h = hidden;

  for (std::size_t c = 0; c < data.n_classes; ++c) {
    Rng rng(derive_seed(seed, "mlp", c));
    MlpParams p;
    p.in = in;
    p.hidden = h;
    p.w1.resize(static_cast<std::size_t>(h) * in);
    p.b1.assign(static_cast<std::size_t>(h), 0.0);
    p.w2.resize(static_cast<std::size_t>(h));
    init_uniform(p.w1, 1.0 / std::sqrt(static_cast<double>(in)), rng);
    init_uniform(p.w2, 1.0 / std::sqrt(static_cast<double>(h)), rng);

    std::vector<double> act(static_cast<std::size_t>(h));
    for (int e = 0; e < epochs; ++e) {
      for (int r : epoch_order(static_cast<std::size_t>(n), rng)) {
        const std::vector<double>& x = z[static_cast<std::size_t>(r)];
        double y = data.y[static_cast<std::size_t>(r)] == static_cast<int>(c) ? 1.0 : 0.0;
        double logit = p.b2;
        for (int j = 0; j < h; ++j) {
          double pre = p.b1[static_cast<std::size_t>(j)];
          const double* w_row = &p.w1[static_cast<std::size_t>(j) * in];
          for (int i = 0; i < in; ++i) pre += w_row[i] * x[static_cast<std::size_t>(i)];
          act[static_cast<std::size_t>(j)] = std::tanh(pre);
          logit += p.w2[static_cast<std::size_t>(j)] * act[static_cast<std::size_t>(j)];
        }
        double dlogit = sigmoid(logit) - y;
        for (int j = 0; j < h; ++j) {
          double a = act[static_cast<std::size_t>(j)];
          double dpre = dlogit * p.w2[static_cast<std::size_t>(j)] * (1.0 - a * a);
          p.w2[static_cast<std::size_t>(j)] -= rate * dlogit * a;
          p.b1[static_cast<std::size_t>(j)] -= rate * dpre;
          double* w_row = &p.w1[static_cast<std::size_t>(j) * in];
          for (int i = 0; i < in; ++i) w_row[i] -= rate * dpre * x[static_cast<std::size_t>(i)];
        }
        p.b2 -= rate * dlogit;
      }
    }
    model->nets_.push_back(std::move(p));
    model->train_ops_ +=
        static_cast<std::uint64_t>(epochs) * static_cast<std::uint64_t>(n) * h * (in * 4 + 8);
  }
  return model;
}

void Mlp::class_scores(const std::vector<double>& x, std::vector<double>& out) const {
  std::vector<double> z;
  scaler_.transform(x, z);
  out.resize(nets_.size());
  for (std::size_t c = 0; c < nets_.size(); ++c) {
    const MlpParams& p = nets_[c];
    double logit = p.b2;
    for (int j = 0; j < p.hidden; ++j) {
      double pre = p.b1[static_cast<std::size_t>(j)];
      const double* w_row = &p.w1[static_cast<std::size_t>(j) * p.in];
      for (int i = 0; i < p.in; ++i) pre += w_row[i] * z[static_cast<std::size_t>(i)];
      logit += p.w2[static_cast<std::size_t>(j)] * std::tanh(pre);
    }
    out[c] = sigmoid(logit);
  }
}

std::uint64_t Mlp::predict_ops_per_sample() const {
  if (nets_.empty()) return 0;
  return nets_.size() * static_cast<std::uint64_t>(nets_[0].hidden) * (nets_[0].in * 2 + 4);
}

nlohmann::json Mlp::to_json() const {
  nlohmann::json nets = nlohmann::json::array();
  for (const auto& p : nets_) {
    nets.push_back({{"in", p.in},
                    {"hidden", p.hidden},
                    {"w1", vec_json(p.w1)},
                    {"b1", vec_json(p.b1)},
                    {"w2", vec_json(p.w2)},
                    {"b2", p.b2}});
  }
  return {{"kind", "mlp"}, {"scaler", scaler_.to_json()}, {"nets", nets},
          {"train_ops", train_ops_}};
}

std::unique_ptr<Mlp> Mlp::from_json(const nlohmann::json& j) {
  auto model = std::make_unique<Mlp>();
  model->scaler_ = Standardizer::from_json(j.at("scaler"));
  for (const auto& jp : j.at("nets")) {
    MlpParams p;
    p.in = jp.at("in").get<int>();
    p.hidden = jp.at("hidden").get<int>();
    p.w1 = vec_from_json(jp.at("w1"));
    p.b1 = vec_from_json(jp.at("b1"));
    p.w2 = vec_from_json(jp.at("w2"));
    p.b2 = jp.at("b2").get<double>();
    model->nets_.push_back(std::move(p));
  }
  model->train_ops_ = j.value("train_ops", 0ull);
  return model;
}

// ---- 1D convolution ---------------------------------------------------------

namespace {

// Forward pass; returns sigmoid output, fills per-filter max and argmax.
double conv_forward(const ConvParams& p, const std::vector<double>& x, std::vector<double>& m,
                    std::vector<int>& arg) {
  const int L = p.in - p.width + 1;
  m.assign(static_cast<std::size_t>(p.filters), 0.0);
  arg.assign(static_cast<std::size_t>(p.filters), -1);
  double logit = p.bo;
  for (int f = 0; f < p.filters; ++f) {
    double best = 0.0;  // ReLU floor: max activation is never below zero
    int best_pos = -1;
    const double* k = &p.kernel[static_cast<std::size_t>(f) * p.width];
    for (int pos = 0; pos < L; ++pos) {
      double a = p.kbias[static_cast<std::size_t>(f)];
      for (int w = 0; w < p.width; ++w) a += k[w] * x[static_cast<std::size_t>(pos + w)];
      if (a > best) {
        best = a;
        best_pos = pos;
      }
    }
    m[static_cast<std::size_t>(f)] = best;
    arg[static_cast<std::size_t>(f)] = best_pos;
    logit += p.wo[static_cast<std::size_t>(f)] * best;
  }
  return sigmoid(logit);
}

}  // namespace

std::unique_ptr<Conv1d> Conv1d::fit(const TrainData& data, int filters, int width, int epochs,
                                    double rate, std::uint64_t seed) {
  auto model = std::make_unique<Conv1d>();
  model->scaler_.fit(data.x);
  const auto z = model->scaler_.transform_all(data.x);
  const int n = static_cast<int>(z.size());
  const int in = static_cast<int>(z[0].size());
  const int L = in - width + 1;

  for (std::size_t c = 0; c < data.n_classes; ++c) {
    Rng rng(derive_seed(seed, "cnn", c));
    ConvParams p;
    p.in = in;
    p.filters = filters;
    p.width = width;
    p.kernel.resize(static_cast<std::size_t>(filters) * width);
    p.kbias.assign(static_cast<std::size_t>(filters), 0.0);
    p.wo.resize(static_cast<std::size_t>(filters));
    init_uniform(p.kernel, 1.0 / std::sqrt(static_cast<double>(width)), rng);
    init_uniform(p.wo, 1.0 / std::sqrt(static_cast<double>(filters)), rng);

    std::vector<double> m;
    std::vector<int> arg;
    for (int e = 0; e < epochs; ++e) {
      for (int r : epoch_order(static_cast<std::size_t>(n), rng)) {
        const std::vector<double>& x = z[static_cast<std::size_t>(r)];
        double y = data.y[static_cast<std::size_t>(r)] == static_cast<int>(c) ? 1.0 : 0.0;
        double dlogit = conv_forward(p, x, m, arg) - y;
        for (int f = 0; f < filters; ++f) {
          double dm = dlogit * p.wo[static_cast<std::size_t>(f)];
          p.wo[static_cast<std::size_t>(f)] -= rate * dlogit * m[static_cast<std::size_t>(f)];
          int pos = arg[static_cast<std::size_t>(f)];
          if (pos < 0) continue;  // pooled activation was the ReLU floor
          p.kbias[static_cast<std::size_t>(f)] -= rate * dm;
          double* k = &p.kernel[static_cast<std::size_t>(f) * width];
          for (int w = 0; w < width; ++w) {
            k[w] -= rate * dm * x[static_cast<std::size_t>(pos + w)];
          }
        }
        p.bo -= rate * dlogit;
      }
    }
    model->nets_.push_back(std::move(p));
    model->train_ops_ += static_cast<std::uint64_t>(epochs) * static_cast<std::uint64_t>(n) *
                         (static_cast<std::uint64_t>(L) * filters * width * 4 + filters * 6);
  }
  return model;
}

void Conv1d::class_scores(const std::vector<double>& x, std::vector<double>& out) const {
  std::vector<double> z;
  scaler_.transform(x, z);
  out.resize(nets_.size());
  std::vector<double> m;
  std::vector<int> arg;
  for (std::size_t c = 0; c < nets_.size(); ++c) {
    out[c] = conv_forward(nets_[c], z, m, arg);
  }
}

std::uint64_t Conv1d::predict_ops_per_sample() const {
  if (nets_.empty()) return 0;
  const ConvParams& p = nets_[0];
  const std::uint64_t L = static_cast<std::uint64_t>(p.in - p.width + 1);
  return nets_.size() * (L * p.filters * p.width * 2 + p.filters * 4);
}

nlohmann::json Conv1d::to_json() const {
  nlohmann::json nets = nlohmann::json::array();
  for (const auto& p : nets_) {
    nets.push_back({{"in", p.in},
                    {"filters", p.filters},
                    {"width", p.width},
                    {"kernel", vec_json(p.kernel)},
                    {"kbias", vec_json(p.kbias)},
                    {"wo", vec_json(p.wo)},
                    {"bo", p.bo}});
  }
  return {{"kind", "cnn"}, {"scaler", scaler_.to_json()}, {"nets", nets},
          {"train_ops", train_ops_}};
}

std::unique_ptr<Conv1d> Conv1d::from_json(const nlohmann::json& j) {
  auto model = std::make_unique<Conv1d>();
  model->scaler_ = Standardizer::from_json(j.at("scaler"));
  for (const auto& jp : j.at("nets")) {
    ConvParams p;
    p.in = jp.at("in").get<int>();
    p.filters = jp.at("filters").get<int>();
    p.width = jp.at("width").get<int>();
    p.kernel = vec_from_json(jp.at("kernel"));
    p.kbias = vec_from_json(jp.at("kbias"));
    p.wo = vec_from_json(jp.at("wo"));
    p.bo = jp.at("bo").get<double>();
    model->nets_.push_back(std::move(p));
  }
  model->train_ops_ = j.value("train_ops", 0ull);
  return model;
}

// ---- RNN -------------------------------------------------------------------

namespace {

double rnn_forward(const RnnParams& p, const std::vector<double>& x,
                   std::vector<std::vector<double>>& hs) {
  const int h = p.hidden;
  const int T = static_cast<int>(x.size());
  hs.assign(static_cast<std::size_t>(T) + 1, std::vector<double>(static_cast<std::size_t>(h), 0.0));
  for (int t = 0; t < T; ++t) {
    const auto& prev = hs[static_cast<std::size_t>(t)];
    auto& cur = hs[static_cast<std::size_t>(t) + 1];
    for (int j = 0; j < h; ++j) {
      double pre = p.wx[static_cast<std::size_t>(j)] * x[static_cast<std::size_t>(t)] +
                   p.bh[static_cast<std::size_t>(j)];
      const double* row = &p.wh[static_cast<std::size_t>(j) * h];
      for (int k = 0; k < h; ++k) pre += row[k] * prev[static_cast<std::size_t>(k)];
      cur[static_cast<std::size_t>(j)] = std::tanh(pre);
    }
  }
  double logit = p.bo;
  const auto& last = hs.back();
  for (int j = 0; j < h; ++j) logit += p.wo[static_cast<std::size_t>(j)] * last[static_cast<std::size_t>(j)];
  return sigmoid(logit);
}

}  // namespace

std::unique_ptr<Rnn> Rnn::fit(const TrainData& data, int hidden, int epochs, double rate,
                              std::uint64_t seed) {
  auto model = std::make_unique<Rnn>();
  model->scaler_.fit(data.x);
  const auto z = model->scaler_.transform_all(data.x);
  const int n = static_cast<int>(z.size());
  const int T = static_cast<int>(z[0].size());
  const int h = hidden;

  for (std::size_t c = 0; c < data.n_classes; ++c) {
    Rng rng(derive_seed(seed, "rnn", c));
    RnnParams p;
    p.hidden = h;
    p.wx.resize(static_cast<std::size_t>(h));
    p.wh.resize(static_cast<std::size_t>(h) * h);
    p.bh.assign(static_cast<std::size_t>(h), 0.0);
    p.wo.resize(static_cast<std::size_t>(h));
    init_uniform(p.wx, 0.5, rng);
    init_uniform(p.wh, 1.0 / std::sqrt(static_cast<double>(h)), rng);
    init_uniform(p.wo, 1.0 / std::sqrt(static_cast<double>(h)), rng);

    std::vector<std::vector<double>> hs;
    std::vector<double> dh(static_cast<std::size_t>(h)), dh_prev(static_cast<std::size_t>(h));
    std::vector<double> gwx(static_cast<std::size_t>(h)), gbh(static_cast<std::size_t>(h));
    std::vector<double> gwh(static_cast<std::size_t>(h) * h);

    for (int e = 0; e < epochs; ++e) {
      for (int r : epoch_order(static_cast<std::size_t>(n), rng)) {
        const std::vector<double>& x = z[static_cast<std::size_t>(r)];
        double y = data.y[static_cast<std::size_t>(r)] == static_cast<int>(c) ? 1.0 : 0.0;
        double dlogit = rnn_forward(p, x, hs) - y;

        std::fill(gwx.begin(), gwx.end(), 0.0);
        std::fill(gbh.begin(), gbh.end(), 0.0);
        std::fill(gwh.begin(), gwh.end(), 0.0);
        const auto& last = hs.back();
        for (int j = 0; j < h; ++j) {
          dh[static_cast<std::size_t>(j)] = dlogit * p.wo[static_cast<std::size_t>(j)];
        }
        for (int t = T - 1; t >= 0; --t) {
          const auto& cur = hs[static_cast<std::size_t>(t) + 1];
          const auto& prev = hs[static_cast<std::size_t>(t)];
          std::fill(dh_prev.begin(), dh_prev.end(), 0.0);
          for (int j = 0; j < h; ++j) {
            double a = cur[static_cast<std::size_t>(j)];
            double dpre = dh[static_cast<std::size_t>(j)] * (1.0 - a * a);
            gwx[static_cast<std::size_t>(j)] += dpre * x[static_cast<std::size_t>(t)];
            gbh[static_cast<std::size_t>(j)] += dpre;
            double* grow = &gwh[static_cast<std::size_t>(j) * h];
            const double* row = &p.wh[static_cast<std::size_t>(j) * h];
            for (int k = 0; k < h; ++k) {
              grow[k] += dpre * prev[static_cast<std::size_t>(k)];
              dh_prev[static_cast<std::size_t>(k)] += dpre * row[k];
            }
          }
          std::swap(dh, dh_prev);
        }

        for (int j = 0; j < h; ++j) {
          p.wo[static_cast<std::size_t>(j)] -=
              rate * clip(dlogit * last[static_cast<std::size_t>(j)], kClip);
          p.wx[static_cast<std::size_t>(j)] -= rate * clip(gwx[static_cast<std::size_t>(j)], kClip);
          p.bh[static_cast<std::size_t>(j)] -= rate * clip(gbh[static_cast<std::size_t>(j)], kClip);
          double* row = &p.wh[static_cast<std::size_t>(j) * h];
          const double* grow = &gwh[static_cast<std::size_t>(j) * h];
          for (int k = 0; k < h; ++k) row[k] -= rate * clip(grow[k], kClip);
        }
        p.bo -= rate * clip(dlogit, kClip);
      }
    }
    model->nets_.push_back(std::move(p));
    model->train_ops_ += static_cast<std::uint64_t>(epochs) * static_cast<std::uint64_t>(n) * T *
                         (static_cast<std::uint64_t>(h) * h * 4 + h * 6);
  }
  return model;
}

void Rnn::class_scores(const std::vector<double>& x, std::vector<double>& out) const {
  std::vector<double> z;
  scaler_.transform(x, z);
  out.resize(nets_.size());
  std::vector<std::vector<double>> hs;
  for (std::size_t c = 0; c < nets_.size(); ++c) out[c] = rnn_forward(nets_[c], z, hs);
}

std::uint64_t Rnn::predict_ops_per_sample() const {
  if (nets_.empty()) return 0;
  const std::uint64_t h = static_cast<std::uint64_t>(nets_[0].hidden);
  const std::uint64_t T = scaler_.mean.size();
  return nets_.size() * T * (h * h * 2 + h * 4);
}

nlohmann::json Rnn::to_json() const {
  nlohmann::json nets = nlohmann::json::array();
  for (const auto& p : nets_) {
    nets.push_back({{"hidden", p.hidden},
                    {"wx", vec_json(p.wx)},
                    {"wh", vec_json(p.wh)},
                    {"bh", vec_json(p.bh)},
                    {"wo", vec_json(p.wo)},
                    {"bo", p.bo}});
  }
  return {{"kind", "rnn"}, {"scaler", scaler_.to_json()}, {"nets", nets},
          {"train_ops", train_ops_}};
}

std::unique_ptr<Rnn> Rnn::from_json(const nlohmann::json& j) {
  auto model = std::make_unique<Rnn>();
  model->scaler_ = Standardizer::from_json(j.at("scaler"));
  for (const auto& jp : j.at("nets")) {
    RnnParams p;
    p.hidden = jp.at("hidden").get<int>();
    p.wx = vec_from_json(jp.at("wx"));
    p.wh = vec_from_json(jp.at("wh"));
    p.bh = vec_from_json(jp.at("bh"));
    p.wo = vec_from_json(jp.at("wo"));
    p.bo = jp.at("bo").get<double>();
    model->nets_.push_back(std::move(p));
  }
  model->train_ops_ = j.value("train_ops", 0ull);
  return model;
}

// ---- LSTM ------------------------------------------------------------------

namespace {

struct LstmTrace {
  // Per-step gate activations and cell states for BPTT.
  std::vector<std::vector<double>> i, f, g, o, c, tc, h;
};

double lstm_forward(const LstmParams& p, const std::vector<double>& x, LstmTrace& tr) {
  const int h = p.hidden;
  const int T = static_cast<int>(x.size());
  auto zero = [&](std::vector<std::vector<double>>& v, int len) {
    v.assign(static_cast<std::size_t>(len),
             std::vector<double>(static_cast<std::size_t>(h), 0.0));
  };
  zero(tr.i, T);
  zero(tr.f, T);
  zero(tr.g, T);
  zero(tr.o, T);
  zero(tr.c, T + 1);
  zero(tr.tc, T);
  zero(tr.h, T + 1);

  for (int t = 0; t < T; ++t) {
    const auto& h_prev = tr.h[static_cast<std::size_t>(t)];
    const auto& c_prev = tr.c[static_cast<std::size_t>(t)];
    for (int j = 0; j < h; ++j) {
      double pre[4];
      for (int g4 = 0; g4 < 4; ++g4) {
        const std::size_t gj = static_cast<std::size_t>(g4) * h + static_cast<std::size_t>(j);
        double acc = p.wx[gj] * x[static_cast<std::size_t>(t)] + p.b[gj];
        const double* row = &p.wh[gj * static_cast<std::size_t>(h)];
        for (int k = 0; k < h; ++k) acc += row[k] * h_prev[static_cast<std::size_t>(k)];
        pre[g4] = acc;
      }
      double gi = sigmoid(pre[0]);
      double gf = sigmoid(pre[1]);
      double gg = std::tanh(pre[2]);
      double go = sigmoid(pre[3]);
      double cc = gf * c_prev[static_cast<std::size_t>(j)] + gi * gg;
      double tcc = std::tanh(cc);
      tr.i[static_cast<std::size_t>(t)][static_cast<std::size_t>(j)] = gi;
      tr.f[static_cast<std::size_t>(t)][static_cast<std::size_t>(j)] = gf;
      tr.g[static_cast<std::size_t>(t)][static_cast<std::size_t>(j)] = gg;
      tr.o[static_cast<std::size_t>(t)][static_cast<std::size_t>(j)] = go;
      tr.c[static_cast<std::size_t>(t) + 1][static_cast<std::size_t>(j)] = cc;
      tr.tc[static_cast<std::size_t>(t)][static_cast<std::size_t>(j)] = tcc;
      tr.h[static_cast<std::size_t>(t) + 1][static_cast<std::size_t>(j)] = go * tcc;
    }
  }
  double logit = p.bo;
  const auto& last = tr.h.back();
  for (int j = 0; j < h; ++j) {
    logit += p.wo[static_cast<std::size_t>(j)] * last[static_cast<std::size_t>(j)];
  }
  return sigmoid(logit);
}

}  // namespace

std::unique_ptr<Lstm> Lstm::fit(const TrainData& data, int hidden, int epochs, double rate,
                                std::uint64_t seed) {
  auto model = std::make_unique<Lstm>();
  model->scaler_.fit(data.x);
  const auto z = model->scaler_.transform_all(data.x);
  const int n = static_cast<int>(z.size());
  const int T = static_cast<int>(z[0].size());
  const int h = hidden;
  const std::size_t h4 = static_cast<std::size_t>(4) * h;

  for (std::size_t c = 0; c < data.n_classes; ++c) {
    Rng rng(derive_seed(seed, "lstm", c));
    LstmParams p;
    p.hidden = h;
    p.wx.resize(h4);
    p.wh.resize(h4 * static_cast<std::size_t>(h));
    p.b.assign(h4, 0.0);
    p.wo.resize(static_cast<std::size_t>(h));
    init_uniform(p.wx, 0.5, rng);
    init_uniform(p.wh, 1.0 / std::sqrt(static_cast<double>(h)), rng);
    init_uniform(p.wo, 1.0 / std::sqrt(static_cast<double>(h)), rng);
    for (int j = 0; j < h; ++j) p.b[static_cast<std::size_t>(h) + j] = 1.0;  // forget gate open

    LstmTrace tr;
    std::vector<double> gwx(h4), gb(h4), gwh(h4 * static_cast<std::size_t>(h));
    std::vector<double> dh(static_cast<std::size_t>(h)), dh_prev(static_cast<std::size_t>(h));
    std::vector<double> dc(static_cast<std::size_t>(h)), dz(4);

    for (int e = 0; e < epochs; ++e) {
      for (int r : epoch_order(static_cast<std::size_t>(n), rng)) {
        const std::vector<double>& x = z[static_cast<std::size_t>(r)];
        double y = data.y[static_cast<std::size_t>(r)] == static_cast<int>(c) ? 1.0 : 0.0;
        double dlogit = lstm_forward(p, x, tr) - y;

        std::fill(gwx.begin(), gwx.end(), 0.0);
        std::fill(gb.begin(), gb.end(), 0.0);
        std::fill(gwh.begin(), gwh.end(), 0.0);
        std::fill(dc.begin(), dc.end(), 0.0);
        const auto& last = tr.h.back();
        for (int j = 0; j < h; ++j) {
          dh[static_cast<std::size_t>(j)] = dlogit * p.wo[static_cast<std::size_t>(j)];
        }

        for (int t = T - 1; t >= 0; --t) {
          const auto& h_prev = tr.h[static_cast<std::size_t>(t)];
          const auto& c_prev = tr.c[static_cast<std::size_t>(t)];
          std::fill(dh_prev.begin(), dh_prev.end(), 0.0);
          for (int j = 0; j < h; ++j) {
            const std::size_t sj = static_cast<std::size_t>(j);
            double gi = tr.i[static_cast<std::size_t>(t)][sj];
            double gf = tr.f[static_cast<std::size_t>(t)][sj];
            double gg = tr.g[static_cast<std::size_t>(t)][sj];
            double go = tr.o[static_cast<std::size_t>(t)][sj];
            double tcc = tr.tc[static_cast<std::size_t>(t)][sj];

            double dout = dh[sj] * tcc;
            double dcell = dc[sj] + dh[sj] * go * (1.0 - tcc * tcc);
            double din = dcell * gg;
            double dgg = dcell * gi;
            double dforget = dcell * c_prev[sj];

            dz[0] = din * gi * (1.0 - gi);
            dz[1] = dforget * gf * (1.0 - gf);
            dz[2] = dgg * (1.0 - gg * gg);
            dz[3] = dout * go * (1.0 - go);

            for (int g4 = 0; g4 < 4; ++g4) {
              const std::size_t gj = static_cast<std::size_t>(g4) * h + sj;
              gwx[gj] += dz[static_cast<std::size_t>(g4)] * x[static_cast<std::size_t>(t)];
              gb[gj] += dz[static_cast<std::size_t>(g4)];
              double* grow = &gwh[gj * static_cast<std::size_t>(h)];
              const double* row = &p.wh[gj * static_cast<std::size_t>(h)];
              for (int k = 0; k < h; ++k) {
                grow[k] += dz[static_cast<std::size_t>(g4)] * h_prev[static_cast<std::size_t>(k)];
                dh_prev[static_cast<std::size_t>(k)] += dz[static_cast<std::size_t>(g4)] * row[k];
              }
            }
            dc[sj] = dcell * gf;
          }
          std::swap(dh, dh_prev);
        }

        for (std::size_t idx = 0; idx < h4; ++idx) {
          p.wx[idx] -= rate * clip(gwx[idx], kClip);
          p.b[idx] -= rate * clip(gb[idx], kClip);
        }
        for (std::size_t idx = 0; idx < gwh.size(); ++idx) {
          p.wh[idx] -= rate * clip(gwh[idx], kClip);
        }
        for (int j = 0; j < h; ++j) {
          p.wo[static_cast<std::size_t>(j)] -=
              rate * clip(dlogit * last[static_cast<std::size_t>(j)], kClip);
        }
        p.bo -= rate * clip(dlogit, kClip);
      }
    }
    model->nets_.push_back(std::move(p));
    model->train_ops_ += static_cast<std::uint64_t>(epochs) * static_cast<std::uint64_t>(n) * T *
                         (static_cast<std::uint64_t>(h) * h * 16 + h * 12);
  }
  return model;
}

void Lstm::class_scores(const std::vector<double>& x, std::vector<double>& out) const {
  std::vector<double> z;
  scaler_.transform(x, z);
  out.resize(nets_.size());
  LstmTrace tr;
  for (std::size_t c = 0; c < nets_.size(); ++c) out[c] = lstm_forward(nets_[c], z, tr);
}

std::uint64_t Lstm::predict_ops_per_sample() const {
  if (nets_.empty()) return 0;
  const std::uint64_t h = static_cast<std::uint64_t>(nets_[0].hidden);
  const std::uint64_t T = scaler_.mean.size();
  return nets_.size() * T * (h * h * 8 + h * 8);
}

nlohmann::json Lstm::to_json() const {
  nlohmann::json nets = nlohmann::json::array();
  for (const auto& p : nets_) {
    nets.push_back({{"hidden", p.hidden},
                    {"wx", vec_json(p.wx)},
                    {"wh", vec_json(p.wh)},
                    {"b", vec_json(p.b)},
                    {"wo", vec_json(p.wo)},
                    {"bo", p.bo}});
  }
  return {{"kind", "lstm"}, {"scaler", scaler_.to_json()}, {"nets", nets},
          {"train_ops", train_ops_}};
}

std::unique_ptr<Lstm> Lstm::from_json(const nlohmann::json& j) {
  auto model = std::make_unique<Lstm>();
  model->scaler_ = Standardizer::from_json(j.at("scaler"));
  for (const auto& jp : j.at("nets")) {
    LstmParams p;
    p.hidden = jp.at("hidden").get<int>();
    p.wx = vec_from_json(jp.at("wx"));
    p.wh = vec_from_json(jp.at("wh"));
    p.b = vec_from_json(jp.at("b"));
    p.wo = vec_from_json(jp.at("wo"));
    p.bo = jp.at("bo").get<double>();
    model->nets_.push_back(std::move(p));
  }
  model->train_ops_ = j.value("train_ops", 0ull);
  return model;
}

}  // namespace twinpot::ml::internal
