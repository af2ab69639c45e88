#include "evdet/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>
#include <mutex>
#include <random>
#include <sstream>
#include <unordered_map>

#include "evdet/kernels.hpp"
#include "evdet/rng.hpp"

namespace evdet {

void TrainConfig::validate() const {
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw DataError("train: alpha in [0,1]");
    if (!(gamma >= 0.0)) throw DataError("train: gamma must be >= 0");
    if (!(initial_lr > 0.0)) throw DataError("train: initial_lr must be > 0");
    if (!(stop_lr > 0.0)) throw DataError("train: stop_lr must be > 0");
    if (!(stop_lr < initial_lr)) throw DataError("train: stop_lr must be < initial_lr");
    if (plateau_patience <= 0) throw DataError("train: plateau_patience must be > 0");
    if (!(lr_decay_factor > 0.0 && lr_decay_factor < 1.0)) {
        throw DataError("train: lr_decay_factor in (0,1)");
    }
    if (max_iterations <= 0) throw DataError("train: max_iterations must be > 0");
    if (batch_size < 0) throw DataError("train: batch_size must be >= 0");
}

namespace {

inline double clamp_prob(double p) {
    return std::min(1.0 - kProbEpsilon, std::max(kProbEpsilon, p));
}

}  // namespace

double focal_loss(double p, bool y, double alpha, double gamma) {
    const double pc = clamp_prob(p);
    const double q = y ? pc : 1.0 - pc;
    const double a = y ? alpha : 1.0 - alpha;
    const double mod = gamma == 0.0 ? 1.0 : std::pow(1.0 - q, gamma);
    return -a * mod * std::log(q);
}

double focal_loss_grad_p(double p, bool y, double alpha, double gamma) {
    const double q = y ? p : 1.0 - p;
    const double a = y ? alpha : 1.0 - alpha;
    // d/dq of -a (1-q)^g log q
    double dq;
    if (gamma == 0.0) {
        dq = -a / q;
    } else {
        dq = a * (gamma * std::pow(1.0 - q, gamma - 1.0) * std::log(q) -
                  std::pow(1.0 - q, gamma) / q);
    }
    return y ? dq : -dq;
}

PlateauScheduler::PlateauScheduler(const TrainConfig& cfg)
    : lr_(cfg.initial_lr),
      best_(std::numeric_limits<double>::infinity()),
      factor_(cfg.lr_decay_factor),
      stop_lr_(cfg.stop_lr),
      min_improvement_(cfg.min_improvement),
      patience_(cfg.plateau_patience) {}

PlateauScheduler::Result PlateauScheduler::step(double loss) {
    if (stopped_) return {lr_, true};
    if (loss < best_ - min_improvement_) {
        best_ = loss;
        counter_ = 0;
    } else if (++counter_ >= patience_) {
        lr_ *= factor_;
        ++decays_;
        counter_ = 0;
        // plateau tracking restarts at the new rate
        best_ = std::numeric_limits<double>::infinity();
    }
    if (lr_ < stop_lr_) stopped_ = true;
    return {lr_, stopped_};
}

// ---- features ------------------------------------------------------------

namespace {

struct RadialTables {
    std::vector<float> w1, w2;
    double norm1 = 0.0, norm2 = 0.0;  // 3 * sum of weights
};

// Per-pixel radius from the patch center, normalized so the far corner is 1.
const RadialTables& radial_tables(int size) {
    static std::mutex mu;
    static std::unordered_map<int, std::unique_ptr<RadialTables>> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(size);
    if (it != cache.end()) return *it->second;

    auto t = std::make_unique<RadialTables>();
    const std::size_t n = static_cast<std::size_t>(size) * size;
    t->w1.resize(n);
    t->w2.resize(n);
    const double c = 0.5 * (size - 1);
    const double rmax = std::sqrt(2.0) * std::max(c, 0.5);
    double s1 = 0.0, s2 = 0.0;
    for (int y = 0; y < size; ++y) {
        for (int x = 0; x < size; ++x) {
            const double r = std::sqrt((x - c) * (x - c) + (y - c) * (y - c)) / rmax;
            const std::size_t i = static_cast<std::size_t>(y) * size + x;
            t->w1[i] = static_cast<float>(r);
            t->w2[i] = static_cast<float>(r * r);
            s1 += static_cast<double>(t->w1[i]);
            s2 += static_cast<double>(t->w2[i]);
        }
    }
    t->norm1 = 3.0 * std::max(s1, 1e-12);
    t->norm2 = 3.0 * std::max(s2, 1e-12);
    const RadialTables& ref = *t;
    cache.emplace(size, std::move(t));
    return ref;
}

}  // namespace

FeatureVector compute_features(const ImagePatch& patch) {
    if (patch.size <= 0) throw DataError("compute_features: empty patch");
    const RadialTables& rt = radial_tables(patch.size);
    kernels::PatchStats st;
    kernels::patch_stats(patch.data.data(), patch.size, kBrightThreshold, rt.w1.data(),
                         rt.w2.data(), st);
    const double n = static_cast<double>(patch.size) * patch.size;
    FeatureVector f;
    f[0] = static_cast<double>(st.max_all);
    for (int c = 0; c < 3; ++c) {
        f[1 + c] = st.sum[c] / n;
        f[4 + c] = static_cast<double>(st.bright[c]) / n;
    }
    f[7] = st.radial1 / rt.norm1;
    f[8] = st.radial2 / rt.norm2;
    return f;
}

// ---- synthetic classifier --------------------------------------------------

SyntheticClassifier::SyntheticClassifier(const SyntheticClassifierConfig& cfg) : cfg_(cfg) {
    auto frac = [](double v, const char* name) {
        if (!(v >= 0.0 && v <= 1.0)) {
            throw DataError(std::string("synthetic classifier: ") + name + " in [0,1]");
        }
    };
    frac(cfg.tpr, "tpr");
    frac(cfg.fpr, "fpr");
    frac(cfg.score_hi, "score_hi");
    frac(cfg.score_lo, "score_lo");
}

ClassifierOutput SyntheticClassifier::classify(const ImagePatch&, const FrameContext& ctx) const {
    if (ctx.record == nullptr) {
        throw DataError("synthetic classifier requires the frame record for its noise model");
    }
    const FrameRecord& rec = *ctx.record;
    const std::uint64_t h = mix64(mix64(cfg_.seed, fnv1a(rec.scene_id.c_str())),
                                  mix64(static_cast<std::uint64_t>(rec.track_id),
                                        static_cast<std::uint64_t>(rec.frame_index)));
    const double u = static_cast<double>(h >> 11) * 0x1.0p-53;
    const double p_hi = positive_label(rec) ? cfg_.tpr : cfg_.fpr;
    double score = u < p_hi ? cfg_.score_hi : cfg_.score_lo;
    if (cfg_.jitter > 0.0) {
        const double j = static_cast<double>(mix64(h, 0x7e57) >> 11) * 0x1.0p-53 - 0.5;
        score = std::clamp(score + cfg_.jitter * j, 0.0, 1.0);
    }
    return {score};
}

// ---- focal objective -------------------------------------------------------

FocalObjective::FocalObjective(std::vector<TrainExample> examples, double alpha, double gamma,
                               double weight_decay)
    : examples_(std::move(examples)), alpha_(alpha), gamma_(gamma), weight_decay_(weight_decay) {
    if (examples_.empty()) throw DataError("objective: no examples");
}

namespace {

inline double sigmoid(double z) {
    if (z >= 0.0) {
        const double e = std::exp(-z);
        return 1.0 / (1.0 + e);
    }
    const double e = std::exp(z);
    return e / (1.0 + e);
}

}  // namespace

double FocalObjective::value(const double* w) const {
    double total = 0.0;
    for (const TrainExample& ex : examples_) {
        double z = w[kFeatureCount];
        for (int k = 0; k < kFeatureCount; ++k) z += w[k] * ex.features[k];
        total += focal_loss(sigmoid(z), ex.positive, alpha_, gamma_);
    }
    double loss = total / static_cast<double>(examples_.size());
    if (weight_decay_ > 0.0) {
        double sq = 0.0;
        for (int k = 0; k < kFeatureCount; ++k) sq += w[k] * w[k];
        loss += 0.5 * weight_decay_ * sq;
    }
    return loss;
}

void FocalObjective::gradient(const double* w, double* grad) const {
    std::fill(grad, grad + dim(), 0.0);
    for (const TrainExample& ex : examples_) {
        double z = w[kFeatureCount];
        for (int k = 0; k < kFeatureCount; ++k) z += w[k] * ex.features[k];
        const double p = sigmoid(z);
        double dz = 0.0;
        // inside the clamp band the loss is constant in p, so the gradient is 0
        if (p > kProbEpsilon && p < 1.0 - kProbEpsilon) {
            dz = focal_loss_grad_p(p, ex.positive, alpha_, gamma_) * p * (1.0 - p);
        }
        for (int k = 0; k < kFeatureCount; ++k) grad[k] += dz * ex.features[k];
        grad[kFeatureCount] += dz;
    }
    const double inv_n = 1.0 / static_cast<double>(examples_.size());
    for (int k = 0; k <= kFeatureCount; ++k) grad[k] *= inv_n;
    if (weight_decay_ > 0.0) {
        for (int k = 0; k < kFeatureCount; ++k) grad[k] += weight_decay_ * w[k];
    }
}

// ---- feature classifier ----------------------------------------------------

FitResult FeatureClassifier::fit(const std::vector<TrainExample>& examples,
                                 const TrainConfig& cfg) {
    cfg.validate();
    std::size_t pos = 0;
    for (const TrainExample& ex : examples) pos += ex.positive ? 1 : 0;
    if (examples.empty() || pos == 0 || pos == examples.size()) {
        throw DataError("fit: degenerate_dataset (need both classes)");
    }
    cfg_ = cfg;

    // feature standardization, fitted on the train set
    const double n = static_cast<double>(examples.size());
    feat_mean_.fill(0.0);
    feat_std_.fill(0.0);
    for (const TrainExample& ex : examples) {
        for (int k = 0; k < kFeatureCount; ++k) feat_mean_[k] += ex.features[k];
    }
    for (int k = 0; k < kFeatureCount; ++k) feat_mean_[k] /= n;
    for (const TrainExample& ex : examples) {
        for (int k = 0; k < kFeatureCount; ++k) {
            const double d = ex.features[k] - feat_mean_[k];
            feat_std_[k] += d * d;
        }
    }
    for (int k = 0; k < kFeatureCount; ++k) {
        feat_std_[k] = std::sqrt(feat_std_[k] / n);
        if (feat_std_[k] < 1e-12) feat_std_[k] = 1.0;
    }

    std::vector<TrainExample> standardized = examples;
    for (TrainExample& ex : standardized) {
        for (int k = 0; k < kFeatureCount; ++k) {
            ex.features[k] = (ex.features[k] - feat_mean_[k]) / feat_std_[k];
        }
    }

    const int dim = kFeatureCount + 1;
    std::vector<double> w(dim, 0.0), grad(dim, 0.0), m(dim, 0.0), v(dim, 0.0);

    PlateauScheduler scheduler(cfg);
    double lr = cfg.initial_lr;
    const double beta1 = 0.9, beta2 = 0.999, adam_eps = 1e-8;

    FocalObjective full(standardized, cfg.alpha, cfg.gamma, cfg.weight_decay);

    // minibatch mode reshuffles deterministically each epoch
    std::mt19937_64 shuffle_rng(cfg.seed);
    std::vector<std::size_t> order(standardized.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::size_t cursor = 0;
    const std::size_t batch = cfg.batch_size > 0
                                  ? std::min<std::size_t>(cfg.batch_size, standardized.size())
                                  : standardized.size();
    std::vector<TrainExample> batch_buf;

    FitResult result;
    double loss = 0.0;
    for (int iter = 1; iter <= cfg.max_iterations; ++iter) {
        const FocalObjective* obj = &full;
        std::unique_ptr<FocalObjective> scratch;
        if (batch < standardized.size()) {
            if (cursor + batch > order.size()) {
                std::shuffle(order.begin(), order.end(), shuffle_rng);
                cursor = 0;
            }
            batch_buf.clear();
            for (std::size_t i = 0; i < batch; ++i) batch_buf.push_back(standardized[order[cursor + i]]);
            cursor += batch;
            scratch = std::make_unique<FocalObjective>(batch_buf, cfg.alpha, cfg.gamma,
                                                       cfg.weight_decay);
            obj = scratch.get();
        }

        loss = obj->value(w.data());
        obj->gradient(w.data(), grad.data());

        const double bc1 = 1.0 - std::pow(beta1, iter);
        const double bc2 = 1.0 - std::pow(beta2, iter);
        for (int k = 0; k < dim; ++k) {
            m[k] = beta1 * m[k] + (1.0 - beta1) * grad[k];
            v[k] = beta2 * v[k] + (1.0 - beta2) * grad[k] * grad[k];
            const double mhat = m[k] / bc1;
            const double vhat = v[k] / bc2;
            w[k] -= lr * mhat / (std::sqrt(vhat) + adam_eps);
        }

        const auto sched = scheduler.step(loss);
        lr = sched.lr;
        result.iterations = iter;
        if (sched.stop) break;
    }

    for (int k = 0; k < kFeatureCount; ++k) weights_[k] = w[k];
    bias_ = w[kFeatureCount];
    trained_ = true;
    refresh_version();

    result.final_loss = full.value(w.data());
    result.final_lr = lr;
    result.decays = scheduler.decays();
    return result;
}

double FeatureClassifier::score_features(const FeatureVector& f) const {
    if (!trained_) throw DataError("feature classifier: model_not_trained");
    double z = bias_;
    for (int k = 0; k < kFeatureCount; ++k) {
        z += weights_[k] * ((f[k] - feat_mean_[k]) / feat_std_[k]);
    }
    return sigmoid(z);
}

ClassifierOutput FeatureClassifier::classify(const ImagePatch& patch, const FrameContext&) const {
    return {score_features(compute_features(patch))};
}

void FeatureClassifier::refresh_version() {
    // content hash of the parameters; used for registry/provenance
    std::uint64_t h = 1469598103934665603ULL;
    auto feed = [&h](double d) {
        std::uint64_t bits;
        static_assert(sizeof(bits) == sizeof(d));
        std::memcpy(&bits, &d, sizeof(bits));
        for (int i = 0; i < 8; ++i) {
            h ^= (bits >> (8 * i)) & 0xFF;
            h *= 1099511628211ULL;
        }
    };
    for (double d : weights_) feed(d);
    feed(bias_);
    for (double d : feat_mean_) feed(d);
    for (double d : feat_std_) feed(d);
    char buf[32];
    std::snprintf(buf, sizeof(buf), "m%016llx", static_cast<unsigned long long>(h));
    version_ = buf;
}

namespace {

void write_array(std::ostream& os, const char* key, const double* v, int n) {
    os << key;
    for (int i = 0; i < n; ++i) {
        char buf[40];
        std::snprintf(buf, sizeof(buf), " %a", v[i]);
        os << buf;
    }
    os << "\n";
}

std::vector<double> parse_doubles(std::istringstream& iss, int expect, const char* key) {
    std::vector<double> out;
    std::string tok;
    while (iss >> tok) {
        out.push_back(std::strtod(tok.c_str(), nullptr));
    }
    if (static_cast<int>(out.size()) != expect) {
        throw DataError(std::string("model file: field '") + key + "' expects " +
                        std::to_string(expect) + " values");
    }
    return out;
}

}  // namespace

void FeatureClassifier::save(const std::string& path) const {
    if (!trained_) throw DataError("feature classifier: model_not_trained");
    std::ofstream os(path);
    if (!os) throw DataError("cannot write model file: " + path);
    os << "evdet-model 1\n";
    os << "schema " << kFeatureSchemaVersion << "\n";
    os << "version " << version_ << "\n";
    char buf[128];
    std::snprintf(buf, sizeof(buf), "alpha %a\ngamma %a\ninitial_lr %a\nweight_decay %a\n",
                  cfg_.alpha, cfg_.gamma, cfg_.initial_lr, cfg_.weight_decay);
    os << buf;
    os << "plateau_patience " << cfg_.plateau_patience << "\n";
    std::snprintf(buf, sizeof(buf), "lr_decay_factor %a\nstop_lr %a\n", cfg_.lr_decay_factor,
                  cfg_.stop_lr);
    os << buf;
    write_array(os, "mean", feat_mean_.data(), kFeatureCount);
    write_array(os, "std", feat_std_.data(), kFeatureCount);
    write_array(os, "weights", weights_.data(), kFeatureCount);
    write_array(os, "bias", &bias_, 1);
    if (!os) throw DataError("failed writing model file: " + path);
}

FeatureClassifier FeatureClassifier::load(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw DataError("cannot open model file: " + path);
    std::string line;
    if (!std::getline(is, line) || line != "evdet-model 1") {
        throw DataError("model file: bad magic in " + path);
    }
    FeatureClassifier out;
    bool have_weights = false, have_bias = false, have_mean = false, have_std = false;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::istringstream iss(line);
        std::string key;
        iss >> key;
        if (key == "schema") {
            int v = -1;
            iss >> v;
            if (v != kFeatureSchemaVersion) {
                throw DataError("model file: feature schema " + std::to_string(v) +
                                " does not match built schema " +
                                std::to_string(kFeatureSchemaVersion));
            }
        } else if (key == "version") {
            iss >> out.version_;
        } else if (key == "alpha") {
            out.cfg_.alpha = parse_doubles(iss, 1, "alpha")[0];
        } else if (key == "gamma") {
            out.cfg_.gamma = parse_doubles(iss, 1, "gamma")[0];
        } else if (key == "initial_lr") {
            out.cfg_.initial_lr = parse_doubles(iss, 1, "initial_lr")[0];
        } else if (key == "weight_decay") {
            out.cfg_.weight_decay = parse_doubles(iss, 1, "weight_decay")[0];
        } else if (key == "plateau_patience") {
            iss >> out.cfg_.plateau_patience;
        } else if (key == "lr_decay_factor") {
            out.cfg_.lr_decay_factor = parse_doubles(iss, 1, "lr_decay_factor")[0];
        } else if (key == "stop_lr") {
            out.cfg_.stop_lr = parse_doubles(iss, 1, "stop_lr")[0];
        } else if (key == "mean") {
            auto v = parse_doubles(iss, kFeatureCount, "mean");
            std::copy(v.begin(), v.end(), out.feat_mean_.begin());
            have_mean = true;
        } else if (key == "std") {
            auto v = parse_doubles(iss, kFeatureCount, "std");
            std::copy(v.begin(), v.end(), out.feat_std_.begin());
            have_std = true;
        } else if (key == "weights") {
            auto v = parse_doubles(iss, kFeatureCount, "weights");
            std::copy(v.begin(), v.end(), out.weights_.begin());
            have_weights = true;
        } else if (key == "bias") {
            out.bias_ = parse_doubles(iss, 1, "bias")[0];
            have_bias = true;
        } else {
            throw DataError("model file: unknown field '" + key + "' in " + path);
        }
    }
    if (!have_weights || !have_bias || !have_mean || !have_std) {
        throw DataError("model file: missing fields in " + path);
    }
    out.trained_ = true;
    return out;
}

}  // namespace evdet
