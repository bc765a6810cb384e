#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "scr/augment.hpp"
#include "scr/contrastive.hpp"
#include "scr/data.hpp"
#include "scr/nn.hpp"

namespace scr {

// Network widths are fixed by the method: hidden dimension 256 throughout, a
// four-layer encoder, and two-layer projector and regressor heads.
inline constexpr std::size_t kHiddenDim = 256;
inline constexpr std::size_t kEncoderLayers = 4;

enum class Ablation {
    Full,                 // corruption + label-distance pairs (the method)
    NoCorruption,         // label-distance pairs on the raw batch only
    SelfSupervisedPairs,  // each sample positive only with its corrupted copy
    BaselineMlp,          // no pretraining, joint MSE training
};

struct PretrainConfig {
    std::size_t batch_size = 256;  // 2048 works well on large datasets; 256 suits small ones
    double corruption_rate = 0.5;
    double temperature = 1.0;
    double theta = 0.35;
    double learning_rate = 0.001;
    std::size_t patience = 3;
    std::size_t max_epochs = 200;
    SupconAggregate aggregate = SupconAggregate::Mean;
};

struct FinetuneConfig {
    std::size_t batch_size = 128;
    double learning_rate = 0.001;
    std::size_t patience = 3;
    std::size_t max_epochs = 200;
};

struct TrainPlan {
    PretrainConfig pretrain;
    FinetuneConfig finetune;
    Ablation ablation = Ablation::Full;
    std::uint64_t seed = 1;
};

struct EpochRecord {
    std::size_t epoch = 0;
    std::string phase;  // "pretrain" or "finetune"
    double train_loss = 0.0;
    double val_loss = 0.0;
};

struct TrainReport {
    std::vector<EpochRecord> history;
    std::size_t pretrain_best_epoch = 0;
    std::size_t pretrain_stop_epoch = 0;
    std::size_t finetune_best_epoch = 0;
    std::size_t finetune_stop_epoch = 0;
    double final_val_loss = 0.0;
    double wall_seconds = 0.0;
};

void save_train_report_csv(const TrainReport& report, const std::string& path);

struct ModelBundle {
    Mlp encoder;
    Mlp projector;
    Mlp regressor;
    Standardizer standardizer;
    std::string modality_tag;
};

bool bundles_equal(const ModelBundle& a, const ModelBundle& b);

// Early stopping on a validation loss: stop once the loss has failed to
// improve for `patience` consecutive epochs; callers keep the best-epoch
// weights. Epochs are 1-based.
class EarlyStopper {
public:
    explicit EarlyStopper(std::size_t patience);
    bool observe(double val_loss);  // true when this epoch improved on the best
    bool should_stop() const { return bad_streak_ >= patience_; }
    std::size_t best_epoch() const { return best_epoch_; }
    std::size_t epochs_seen() const { return epoch_; }
    double best_loss() const { return best_loss_; }

private:
    std::size_t patience_;
    std::size_t epoch_ = 0;
    std::size_t best_epoch_ = 0;
    std::size_t bad_streak_ = 0;
    double best_loss_ = 0.0;
};

// Batch assembly helpers (also exercised directly by tests).
Matrix vstack(const Matrix& top, const Matrix& bottom);
PairMask self_pair_mask(std::size_t batch_rows);  // positives (i, B+i) only, M = 2B

// One pretraining batch: originals stacked over their corrupted copies (which
// keep the original labels), or the originals alone under NoCorruption.
struct ContrastiveBatch {
    Matrix inputs;               // [M x D], M = 2B with corruption, B without
    std::vector<double> labels;  // length M
    std::size_t base_rows = 0;
};

ContrastiveBatch assemble_contrastive_batch(const Dataset& dataset, const std::vector<std::size_t>& rows,
                                            const ColumnPool& pool, const TrainPlan& plan, Rng& rng);
PairMask mask_for_batch(const ContrastiveBatch& batch, const TrainPlan& plan);

struct PretrainResult {
    Mlp encoder;
    Mlp projector;
};

// Phase 1: contrastive representation learning on corrupted/original pairs.
// Both datasets must be standardized. Early stopping watches the contrastive
// loss on validation batches that are fixed (corruption included) up front.
PretrainResult pretrain(const Dataset& train, const Dataset& val, const TrainPlan& plan,
                        TrainReport& report);

// Phase 2: MSE training of a fresh regressor on frozen encoder outputs. The
// encoder is applied once per dataset; its weights cannot change here.
Mlp finetune(const Mlp& frozen_encoder, const Dataset& train, const Dataset& val,
             const TrainPlan& plan, TrainReport& report);

struct TrainOutcome {
    ModelBundle bundle;
    TrainReport report;
};

// standardize -> pretrain -> finetune (or the requested ablation).
TrainOutcome train_scr(const Dataset& dataset, const SplitIndices& split, const TrainPlan& plan);

// Deterministic regression outputs; `dataset` must already be standardized
// with the bundle's standardizer.
std::vector<double> predict(const ModelBundle& bundle, const Dataset& dataset);

// Elementwise mean across per-modality predictors aligned by row order.
std::vector<double> ensemble_predict(const std::vector<ModelBundle>& bundles,
                                     const std::vector<Dataset>& datasets);

// Text checkpoint, value-exact round trip (17 significant digits).
void save_bundle(const ModelBundle& bundle, const std::string& path);
ModelBundle load_bundle(const std::string& path);

}  // namespace scr
