#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <json.hpp>

#include "adaptive/behavior/behavior.hpp"
#include "adaptive/core/error.hpp"
#include "adaptive/core/fixed_text.hpp"
#include "adaptive/core/random.hpp"
#include "adaptive/scenario/log_io.hpp"

namespace adaptive::behavior {

namespace {

// Every feature is non-negative and several are heavy tailed (max |accel|,
// approach-rate variance), so inputs are log-compressed before standardizing.
double compress(double x) { return std::log1p(std::max(0.0, x)); }

}  // namespace

BehaviorClassifier::BehaviorClassifier(int k, std::size_t hidden, std::uint64_t init_seed)
    : input_mean(kFeatureCount, 0.0), input_scale(kFeatureCount, 1.0), seed(init_seed), k_(k), hidden_(hidden) {
  if (k < 1) throw UsageError("classifier needs at least one class");
  if (hidden < 1) throw UsageError("classifier needs at least one hidden unit");
  const std::size_t n_in = kFeatureCount;
  const std::size_t n_out = static_cast<std::size_t>(k);
  params_.assign(hidden * n_in + hidden + n_out * hidden + n_out, 0.0);
  Rng rng(init_seed);
  const double limit1 = std::sqrt(6.0 / static_cast<double>(n_in + hidden));
  for (std::size_t i = 0; i < hidden * n_in; ++i) params_[i] = rng.uniform(-limit1, limit1);
  const double limit2 = std::sqrt(6.0 / static_cast<double>(hidden + n_out));
  const std::size_t w2 = hidden * n_in + hidden;
  for (std::size_t i = 0; i < n_out * hidden; ++i) params_[w2 + i] = rng.uniform(-limit2, limit2);
}

void BehaviorClassifier::forward(const SceneFeatures& f, std::vector<double>& h, std::vector<double>& out) const {
  const std::size_t n_in = kFeatureCount;
  const double* w1 = params_.data();
  const double* b1 = w1 + hidden_ * n_in;
  const double* w2 = b1 + hidden_;
  const double* b2 = w2 + static_cast<std::size_t>(k_) * hidden_;
  std::array<double, kFeatureCount> z{};
  for (std::size_t i = 0; i < n_in; ++i) z[i] = (compress(f[i]) - input_mean[i]) / input_scale[i];
  h.assign(hidden_, 0.0);
  for (std::size_t j = 0; j < hidden_; ++j) {
    double a = b1[j];
    for (std::size_t i = 0; i < n_in; ++i) a += w1[j * n_in + i] * z[i];
    h[j] = a;  // pre-activation; callers apply the ReLU
  }
  out.assign(static_cast<std::size_t>(k_), 0.0);
  for (int c = 0; c < k_; ++c) {
    double a = b2[c];
    for (std::size_t j = 0; j < hidden_; ++j) a += w2[static_cast<std::size_t>(c) * hidden_ + j] * std::max(0.0, h[j]);
    out[static_cast<std::size_t>(c)] = a;
  }
}

std::vector<double> BehaviorClassifier::logits(const SceneFeatures& f) const {
  std::vector<double> h, out;
  forward(f, h, out);
  return out;
}

std::vector<double> BehaviorClassifier::probabilities(const SceneFeatures& f) const {
  auto p = logits(f);
  const double top = *std::max_element(p.begin(), p.end());
  double sum = 0.0;
  for (auto& v : p) {
    v = std::exp(v - top);
    sum += v;
  }
  for (auto& v : p) v /= sum;
  return p;
}

int BehaviorClassifier::predict(const SceneFeatures& f) const {
  const auto p = logits(f);
  return static_cast<int>(std::max_element(p.begin(), p.end()) - p.begin());
}

double BehaviorClassifier::loss(const std::vector<Example>& batch, std::vector<double>* gradient) const {
  if (batch.empty()) return 0.0;
  const std::size_t n_in = kFeatureCount;
  const std::size_t off_b1 = hidden_ * n_in;
  const std::size_t off_w2 = off_b1 + hidden_;
  const std::size_t off_b2 = off_w2 + static_cast<std::size_t>(k_) * hidden_;
  if (gradient) gradient->assign(params_.size(), 0.0);
  std::vector<double> h, out, d_hidden(hidden_);
  double total = 0.0;
  const double scale = 1.0 / static_cast<double>(batch.size());
  for (const auto& ex : batch) {
    if (ex.label < 0 || ex.label >= k_) throw UsageError("label out of range");
    forward(ex.features, h, out);
    const double top = *std::max_element(out.begin(), out.end());
    double sum = 0.0;
    for (const double v : out) sum += std::exp(v - top);
    const double log_z = top + std::log(sum);
    total += log_z - out[static_cast<std::size_t>(ex.label)];
    if (!gradient) continue;
    auto& g = *gradient;
    std::fill(d_hidden.begin(), d_hidden.end(), 0.0);
    for (int c = 0; c < k_; ++c) {
      const double d = (std::exp(out[c] - log_z) - (c == ex.label ? 1.0 : 0.0)) * scale;
      g[off_b2 + c] += d;
      for (std::size_t j = 0; j < hidden_; ++j) {
        g[off_w2 + c * hidden_ + j] += d * std::max(0.0, h[j]);
        d_hidden[j] += d * params_[off_w2 + c * hidden_ + j];
      }
    }
    for (std::size_t j = 0; j < hidden_; ++j) {
      if (h[j] <= 0.0) continue;
      g[off_b1 + j] += d_hidden[j];
      for (std::size_t i = 0; i < n_in; ++i) {
        g[j * n_in + i] += d_hidden[j] * (compress(ex.features[i]) - input_mean[i]) / input_scale[i];
      }
    }
  }
  return total * scale;
}

BehaviorClassifier train_classifier(const std::vector<Example>& dataset, int k, std::uint64_t seed,
                                    const TrainOptions& options) {
  if (dataset.empty()) throw UsageError("training set is empty");
  for (const auto& ex : dataset) {
    if (ex.label < 0 || ex.label >= k) throw UsageError("label out of range");
  }
  BehaviorClassifier model(k, options.hidden, seed);
  model.epochs = options.epochs;
  model.learning_rate = options.learning_rate;

  // Standardization constants, stored at file precision so that a reloaded
  // model behaves identically.
  const double n = static_cast<double>(dataset.size());
  for (std::size_t i = 0; i < kFeatureCount; ++i) {
    double mu = 0.0;
    for (const auto& ex : dataset) mu += compress(ex.features[i]);
    mu /= n;
    double var = 0.0;
    for (const auto& ex : dataset) var += (compress(ex.features[i]) - mu) * (compress(ex.features[i]) - mu);
    const double sd = std::sqrt(var / n);
    model.input_mean[i] = quantize(mu);
    model.input_scale[i] = sd > 1e-6 ? quantize(sd) : 1.0;
  }

  auto& w = model.parameters();
  std::vector<double> m(w.size(), 0.0), v(w.size(), 0.0), grad;
  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed ^ 0x5eedULL);
  std::vector<Example> batch;
  long step = 0;
  for (int epoch = 0; epoch < options.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.index(i)]);
    for (std::size_t start = 0; start < order.size(); start += options.batch_size) {
      batch.clear();
      for (std::size_t j = start; j < std::min(order.size(), start + options.batch_size); ++j) {
        batch.push_back(dataset[order[j]]);
      }
      model.loss(batch, &grad);
      ++step;
      const double c1 = 1.0 - std::pow(options.beta1, static_cast<double>(step));
      const double c2 = 1.0 - std::pow(options.beta2, static_cast<double>(step));
      for (std::size_t p = 0; p < w.size(); ++p) {
        m[p] = options.beta1 * m[p] + (1.0 - options.beta1) * grad[p];
        v[p] = options.beta2 * v[p] + (1.0 - options.beta2) * grad[p] * grad[p];
        w[p] -= options.learning_rate * (m[p] / c1) / (std::sqrt(v[p] / c2) + options.epsilon);
      }
    }
    model.epoch_loss.push_back(model.loss(dataset));
  }
  for (auto& p : w) p = quantize(p);
  return model;
}

double accuracy(const BehaviorClassifier& model, const std::vector<Example>& data) {
  if (data.empty()) return 0.0;
  std::size_t hits = 0;
  for (const auto& ex : data) hits += model.predict(ex.features) == ex.label;
  return static_cast<double>(hits) / static_cast<double>(data.size());
}

BehaviorParams predict_behavior(const BehaviorClassifier& model, const SceneFeatures& features,
                                const calibrate::ClusterModel& clusters) {
  if (model.k() != clusters.k) throw UsageError("classifier and cluster model disagree on K");
  return clusters.centroids.at(static_cast<std::size_t>(model.predict(features)));
}

BehaviorParams predict_city_behavior(const BehaviorClassifier& model, const SceneFeatures& features,
                                     const CityModel& cities) {
  if (static_cast<std::size_t>(model.k()) != cities.params.size()) {
    throw UsageError("classifier and city model disagree on the number of classes");
  }
  return cities.params.at(static_cast<std::size_t>(model.predict(features)));
}

void save_classifier(const BehaviorClassifier& model, const std::filesystem::path& path) {
  std::string out = "{";
  append_json_key(out, "k");
  out += std::to_string(model.k()) + ",";
  append_json_key(out, "inputs");
  out += std::to_string(kFeatureCount) + ",";
  append_json_key(out, "hidden");
  out += std::to_string(model.hidden()) + ",";
  append_json_key(out, "epochs");
  out += std::to_string(model.epochs) + ",";
  append_json_key(out, "learning_rate");
  out += format_fixed(model.learning_rate) + ",";
  append_json_key(out, "seed");
  out += std::to_string(model.seed) + ",";
  append_json_key(out, "input_mean");
  append_fixed_array(out, model.input_mean);
  out += ",";
  append_json_key(out, "input_scale");
  append_fixed_array(out, model.input_scale);
  out += ",";
  append_json_key(out, "epoch_loss");
  append_fixed_array(out, model.epoch_loss);
  out += ",";
  append_json_key(out, "parameters");
  append_fixed_array(out, model.parameters());
  out += "}\n";
  scenario::write_text_file(path, out);
}

BehaviorClassifier load_classifier(const std::filesystem::path& path) {
  using nlohmann::json;
  try {
    const json j = json::parse(scenario::read_text_file(path));
    if (j.at("inputs").get<std::size_t>() != kFeatureCount) throw ParseError(path.string() + ": wrong input width");
    BehaviorClassifier model(j.at("k").get<int>(), j.at("hidden").get<std::size_t>(), j.at("seed").get<std::uint64_t>());
    model.epochs = j.at("epochs").get<int>();
    model.learning_rate = j.at("learning_rate").get<double>();
    model.input_mean = j.at("input_mean").get<std::vector<double>>();
    model.input_scale = j.at("input_scale").get<std::vector<double>>();
    model.epoch_loss = j.at("epoch_loss").get<std::vector<double>>();
    const auto params = j.at("parameters").get<std::vector<double>>();
    if (params.size() != model.parameters().size() || model.input_mean.size() != kFeatureCount ||
        model.input_scale.size() != kFeatureCount) {
      throw ParseError(path.string() + ": parameter count does not match layer shapes");
    }
    model.parameters() = params;
    return model;
  } catch (const json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

}  // namespace adaptive::behavior
