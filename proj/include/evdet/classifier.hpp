#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "evdet/types.hpp"

namespace evdet {

struct ClassifierOutput {
    double probability = 0.0;  // in [0,1]
};

struct TrainConfig {
    double alpha = 0.25;   // focal weighting of the positive class
    double gamma = 2.0;    // focusing exponent
    double initial_lr = 1e-3;
    double weight_decay = 0.0;
    int plateau_patience = 200;   // iterations without improvement before decay
    double lr_decay_factor = 0.5;
    double stop_lr = 1e-6;        // stop once lr drops below this
    double min_improvement = 1e-6;
    int max_iterations = 20000;
    int batch_size = 0;  // 0 = full batch
    std::uint64_t seed = 1;

    void validate() const;
};

// Probabilities are clamped into [eps, 1-eps] before the log.
inline constexpr double kProbEpsilon = 1e-7;

// FL = -alpha_t * (1 - p_t)^gamma * log(p_t), p_t = p if y else 1-p,
// alpha_t = alpha if y else 1-alpha. Reduces to weighted cross-entropy at
// gamma = 0.
double focal_loss(double p, bool y, double alpha, double gamma);

// d(focal_loss)/dp at an (unclamped) p strictly inside (eps, 1-eps).
double focal_loss_grad_p(double p, bool y, double alpha, double gamma);

// Decays the learning rate after `patience` consecutive steps without a loss
// improvement of at least min_improvement, then restarts plateau tracking at
// the new rate. Stops once the rate falls below stop_lr.
class PlateauScheduler {
  public:
    explicit PlateauScheduler(const TrainConfig& cfg);

    struct Result {
        double lr;
        bool stop;
    };
    Result step(double loss);

    double lr() const { return lr_; }
    bool stopped() const { return stopped_; }
    int decays() const { return decays_; }

  private:
    double lr_;
    double best_;
    int counter_ = 0;
    int decays_ = 0;
    bool stopped_ = false;
    double factor_, stop_lr_, min_improvement_;
    int patience_;
};

// ---- features ------------------------------------------------------------

inline constexpr int kFeatureSchemaVersion = 1;
inline constexpr int kFeatureCount = 9;
inline constexpr float kBrightThreshold = 0.7f;

// [0] max intensity over all channels, [1..3] per-channel mean,
// [4..6] per-channel bright-pixel fraction (> kBrightThreshold),
// [7..8] first and second radial brightness moments.
using FeatureVector = std::array<double, kFeatureCount>;

FeatureVector compute_features(const ImagePatch& patch);

// ---- classifier contract ---------------------------------------------------

// Extra context a classifier may consult besides the pixels. The synthetic
// classifier reads the ground-truth label from here; the feature classifier
// ignores it.
struct FrameContext {
    const FrameRecord* record = nullptr;
};

class Classifier {
  public:
    virtual ~Classifier() = default;
    virtual ClassifierOutput classify(const ImagePatch& patch, const FrameContext& ctx) const = 0;
    // False for classifiers that never look at pixels; lets callers skip
    // patch generation entirely.
    virtual bool needs_patch() const { return true; }
    virtual std::string name() const = 0;
};

// Noise-model classifier: emits score_hi with probability TPR on true
// positives and with probability FPR on negatives, score_lo otherwise.
// Draws are a pure hash of (seed, scene, track, frame).
struct SyntheticClassifierConfig {
    double tpr = 0.98;
    double fpr = 0.05;
    double score_hi = 1.0;
    double score_lo = 0.0;
    double jitter = 0.0;  // optional +/- jitter/2 around hi/lo, clamped to [0,1]
    std::uint64_t seed = 99;
};

class SyntheticClassifier : public Classifier {
  public:
    explicit SyntheticClassifier(const SyntheticClassifierConfig& cfg);

    ClassifierOutput classify(const ImagePatch& patch, const FrameContext& ctx) const override;
    bool needs_patch() const override { return false; }
    std::string name() const override { return "synthetic"; }

  private:
    SyntheticClassifierConfig cfg_;
};

// ---- trainable feature classifier ------------------------------------------

struct TrainExample {
    FeatureVector features;
    bool positive = false;
};

// Mean focal loss of a linear model over a fixed (already standardized)
// example set, with analytic gradients. Kept standalone so the
// finite-difference tests can probe it at arbitrary weight points.
class FocalObjective {
  public:
    FocalObjective(std::vector<TrainExample> examples, double alpha, double gamma,
                   double weight_decay);

    int dim() const { return kFeatureCount + 1; }  // weights + bias
    double value(const double* w) const;
    void gradient(const double* w, double* grad) const;

  private:
    std::vector<TrainExample> examples_;
    double alpha_, gamma_, weight_decay_;
};

struct FitResult {
    int iterations = 0;
    double final_loss = 0.0;
    double final_lr = 0.0;
    int decays = 0;
};

// Single linear layer over the patch features with a sigmoid output, trained
// with focal loss by adaptive-moment gradient descent under the plateau
// scheduler. Deterministic for a fixed config and seed.
class FeatureClassifier : public Classifier {
  public:
    FeatureClassifier() = default;

    FitResult fit(const std::vector<TrainExample>& examples, const TrainConfig& cfg);

    bool trained() const { return trained_; }
    double score_features(const FeatureVector& f) const;  // throws if untrained
    ClassifierOutput classify(const ImagePatch& patch, const FrameContext& ctx) const override;
    std::string name() const override { return "feature"; }

    // Versioned flat text format; loading a mismatched feature schema is an
    // error.
    void save(const std::string& path) const;
    static FeatureClassifier load(const std::string& path);

    const std::string& version() const { return version_; }
    const std::array<double, kFeatureCount>& weights() const { return weights_; }
    double bias() const { return bias_; }

  private:
    void refresh_version();

    bool trained_ = false;
    std::array<double, kFeatureCount> feat_mean_{};
    std::array<double, kFeatureCount> feat_std_{};
    std::array<double, kFeatureCount> weights_{};
    double bias_ = 0.0;
    TrainConfig cfg_{};
    std::string version_ = "untrained";
};

}  // namespace evdet
