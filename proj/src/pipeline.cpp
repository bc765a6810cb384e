#include "scr/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "scr/augment.hpp"
#include "scr/errors.hpp"
#include "scr/metrics.hpp"
#include "scr/rng.hpp"

namespace scr {

namespace {

void validate_plan(const TrainPlan& plan) {
    const PretrainConfig& p = plan.pretrain;
    const FinetuneConfig& f = plan.finetune;
    if (p.batch_size == 0 || f.batch_size == 0) throw ConfigError("plan: batch sizes must be positive");
    if (!(p.corruption_rate >= 0.0 && p.corruption_rate <= 1.0)) {
        throw ConfigError("plan: corruption rate must be in [0, 1]");
    }
    if (!(p.temperature > 0.0)) throw ConfigError("plan: temperature must be positive");
    if (!(p.theta > 0.0)) throw ConfigError("plan: theta must be positive");
    if (!(p.learning_rate > 0.0) || !(f.learning_rate > 0.0)) {
        throw ConfigError("plan: learning rates must be positive");
    }
    if (p.patience == 0 || f.patience == 0) throw ConfigError("plan: patience must be >= 1");
    if (p.max_epochs == 0 || f.max_epochs == 0) throw ConfigError("plan: max_epochs must be >= 1");
}

std::vector<double> gather_labels(const Dataset& ds, const std::vector<std::size_t>& rows) {
    std::vector<double> out(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) out[i] = ds.labels[rows[i]];
    return out;
}

Matrix gather_rows(const Matrix& m, const std::vector<std::size_t>& rows) {
    Matrix out(rows.size(), m.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        std::copy(m.row(rows[i]), m.row(rows[i]) + m.cols(), out.row(i));
    }
    return out;
}

// Consecutive chunks of `order`; a trailing partial chunk is dropped when
// requested (pretraining) or kept (fine-tuning).
std::vector<std::vector<std::size_t>> make_batches(const std::vector<std::size_t>& order,
                                                   std::size_t batch_size, bool drop_partial) {
    std::vector<std::vector<std::size_t>> batches;
    std::size_t pos = 0;
    while (pos + batch_size <= order.size()) {
        batches.emplace_back(order.begin() + pos, order.begin() + pos + batch_size);
        pos += batch_size;
    }
    if (pos < order.size() && !drop_partial) {
        batches.emplace_back(order.begin() + pos, order.end());
    }
    if (batches.empty() && !order.empty()) {
        batches.emplace_back(order);  // fewer rows than one batch: use them all
    }
    return batches;
}

// Forward through encoder+projector, normalized supcon loss; when training,
// backprop and apply Adam steps in place.
double contrastive_step(Mlp& encoder, Mlp& projector, const ContrastiveBatch& batch,
                        const PairMask& mask, const TrainPlan& plan, AdamState* encoder_opt,
                        AdamState* projector_opt) {
    ForwardCache enc_cache, proj_cache;
    const bool training = encoder_opt != nullptr;
    Matrix h = forward(encoder, batch.inputs, training ? &enc_cache : nullptr);
    Matrix raw = forward(projector, h, training ? &proj_cache : nullptr);
    EmbeddingBatch embeddings = l2_normalize(raw);
    ContrastiveConfig cfg{plan.pretrain.temperature, plan.pretrain.theta, plan.pretrain.aggregate};
    SupconResult loss = supcon_loss(embeddings, mask, cfg);
    if (training) {
        Matrix grad_raw = l2_normalize_backward(embeddings, loss.grad_z);
        BackwardResult proj_back = backward(projector, proj_cache, grad_raw);
        BackwardResult enc_back = backward(encoder, enc_cache, proj_back.input_grad);
        adam_step(projector, proj_back.grads, *projector_opt);
        adam_step(encoder, enc_back.grads, *encoder_opt);
    }
    return loss.loss;
}

}  // namespace

void save_train_report_csv(const TrainReport& report, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot open report file for writing: " + path);
    out << "epoch,phase,train_loss,val_loss\n";
    char buf[40];
    for (const EpochRecord& row : report.history) {
        out << row.epoch << ',' << row.phase << ',';
        std::snprintf(buf, sizeof buf, "%.17g", row.train_loss);
        out << buf << ',';
        std::snprintf(buf, sizeof buf, "%.17g", row.val_loss);
        out << buf << '\n';
    }
    if (!out) throw DataError("write failed: " + path);
}

bool bundles_equal(const ModelBundle& a, const ModelBundle& b) {
    return a.encoder == b.encoder && a.projector == b.projector && a.regressor == b.regressor &&
           a.standardizer.mean == b.standardizer.mean && a.standardizer.std_dev == b.standardizer.std_dev &&
           a.standardizer.constant == b.standardizer.constant && a.modality_tag == b.modality_tag;
}

EarlyStopper::EarlyStopper(std::size_t patience) : patience_(patience) {
    if (patience == 0) throw ContractError("EarlyStopper: patience must be >= 1");
}

bool EarlyStopper::observe(double val_loss) {
    ++epoch_;
    if (best_epoch_ == 0 || val_loss < best_loss_) {
        best_loss_ = val_loss;
        best_epoch_ = epoch_;
        bad_streak_ = 0;
        return true;
    }
    ++bad_streak_;
    return false;
}

Matrix vstack(const Matrix& top, const Matrix& bottom) {
    if (top.cols() != bottom.cols()) throw ContractError("vstack: column mismatch");
    Matrix out(top.rows() + bottom.rows(), top.cols());
    std::copy(top.data(), top.data() + top.size(), out.data());
    std::copy(bottom.data(), bottom.data() + bottom.size(), out.data() + top.size());
    return out;
}

PairMask self_pair_mask(std::size_t batch_rows) {
    PairMask mask(2 * batch_rows);
    for (std::size_t i = 0; i < batch_rows; ++i) mask.set_positive(i, batch_rows + i);
    return mask;
}

ContrastiveBatch assemble_contrastive_batch(const Dataset& dataset, const std::vector<std::size_t>& rows,
                                            const ColumnPool& pool, const TrainPlan& plan, Rng& rng) {
    ContrastiveBatch out;
    out.base_rows = rows.size();
    Matrix x = Matrix(rows.size(), dataset.n_features());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        std::copy(dataset.features.row(rows[i]), dataset.features.row(rows[i]) + dataset.n_features(),
                  x.row(i));
    }
    std::vector<double> y(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) y[i] = dataset.labels[rows[i]];
    if (plan.ablation == Ablation::NoCorruption) {
        out.inputs = std::move(x);
        out.labels = std::move(y);
        return out;
    }
    CorruptionConfig cfg{plan.pretrain.corruption_rate};
    CorruptResult corrupted = corrupt_batch(x, pool, cfg, rng);
    out.inputs = vstack(x, corrupted.corrupted);
    out.labels = y;
    out.labels.insert(out.labels.end(), y.begin(), y.end());  // copies keep the original labels
    return out;
}

PairMask mask_for_batch(const ContrastiveBatch& batch, const TrainPlan& plan) {
    if (plan.ablation == Ablation::SelfSupervisedPairs) return self_pair_mask(batch.base_rows);
    return determine_pairs(batch.labels, plan.pretrain.theta);
}

PretrainResult pretrain(const Dataset& train, const Dataset& val, const TrainPlan& plan,
                        TrainReport& report) {
    validate_plan(plan);
    if (plan.ablation == Ablation::BaselineMlp) {
        throw ContractError("pretrain: BaselineMlp plans skip pretraining");
    }
    if (!train.standardized || !val.standardized) {
        throw ContractError("pretrain: datasets must be standardized");
    }
    const std::size_t d = train.n_features();
    const std::size_t batch = std::min(plan.pretrain.batch_size, train.n_rows());

    Mlp encoder = Mlp::make({d, kHiddenDim, kHiddenDim, kHiddenDim, kHiddenDim}, Activation::ReLU,
                            derive_seed(plan.seed, "init.encoder"));
    Mlp projector = Mlp::make({kHiddenDim, kHiddenDim, kHiddenDim}, Activation::Identity,
                              derive_seed(plan.seed, "init.projector"));
    AdamState encoder_opt = AdamState::for_net(encoder, plan.pretrain.learning_rate);
    AdamState projector_opt = AdamState::for_net(projector, plan.pretrain.learning_rate);

    ColumnPool pool = make_column_pool(train.features);

    // Validation batches are assembled once, corruption included, so the early
    // stopping signal is a fixed function of the nets.
    std::vector<ContrastiveBatch> val_batches;
    std::vector<PairMask> val_masks;
    {
        Rng val_rng(derive_seed(plan.seed, "pretrain.valbatch"));
        std::vector<std::size_t> order(val.n_rows());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        val_rng.shuffle(order);
        for (const auto& rows : make_batches(order, batch, /*drop_partial=*/false)) {
            if (rows.size() < 2 && plan.ablation == Ablation::NoCorruption) continue;
            ContrastiveBatch vb = assemble_contrastive_batch(val, rows, pool, plan, val_rng);
            PairMask mask = mask_for_batch(vb, plan);
            bool any_positive = false;
            for (std::size_t r = 0; r < mask.size() && !any_positive; ++r) {
                any_positive = mask.positive_count(r) > 0;
            }
            if (!any_positive) continue;  // this fixed batch would be degenerate every epoch
            val_batches.push_back(std::move(vb));
            val_masks.push_back(std::move(mask));
        }
        if (val_batches.empty()) {
            throw DegenerateBatchError("pretrain: no validation batch has a positive pair");
        }
    }

    Rng batch_rng(derive_seed(plan.seed, "pretrain.batching"));
    Rng corruption_rng(derive_seed(plan.seed, "pretrain.corruption"));

    EarlyStopper stopper(plan.pretrain.patience);
    PretrainResult best{encoder, projector};

    std::vector<std::size_t> order(train.n_rows());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    for (std::size_t epoch = 1; epoch <= plan.pretrain.max_epochs; ++epoch) {
        batch_rng.shuffle(order);
        double train_loss_sum = 0.0;
        std::size_t train_batches = 0;
        for (const auto& rows : make_batches(order, batch, /*drop_partial=*/true)) {
            ContrastiveBatch cb = assemble_contrastive_batch(train, rows, pool, plan, corruption_rng);
            PairMask mask = mask_for_batch(cb, plan);
            try {
                train_loss_sum += contrastive_step(encoder, projector, cb, mask, plan, &encoder_opt,
                                                   &projector_opt);
            } catch (const DegenerateBatchError&) {
                // One resample: redraw a fresh batch from the whole training
                // split; a second degenerate draw propagates.
                std::vector<std::size_t> retry =
                    batch_rng.sample_without_replacement(train.n_rows(), rows.size());
                ContrastiveBatch cb2 = assemble_contrastive_batch(train, retry, pool, plan, corruption_rng);
                PairMask mask2 = mask_for_batch(cb2, plan);
                train_loss_sum += contrastive_step(encoder, projector, cb2, mask2, plan, &encoder_opt,
                                                   &projector_opt);
            }
            ++train_batches;
        }
        const double train_loss = train_loss_sum / static_cast<double>(train_batches);

        double val_loss_sum = 0.0;
        for (std::size_t i = 0; i < val_batches.size(); ++i) {
            val_loss_sum += contrastive_step(encoder, projector, val_batches[i], val_masks[i], plan,
                                             nullptr, nullptr);
        }
        const double val_loss = val_loss_sum / static_cast<double>(val_batches.size());

        report.history.push_back({epoch, "pretrain", train_loss, val_loss});
        if (stopper.observe(val_loss)) best = PretrainResult{encoder, projector};
        if (stopper.should_stop()) break;
    }
    report.pretrain_best_epoch = stopper.best_epoch();
    report.pretrain_stop_epoch = stopper.epochs_seen();
    return best;
}

Mlp finetune(const Mlp& frozen_encoder, const Dataset& train, const Dataset& val,
             const TrainPlan& plan, TrainReport& report) {
    validate_plan(plan);
    if (!train.standardized || !val.standardized) {
        throw ContractError("finetune: datasets must be standardized");
    }
    // Frozen encoder means the representation is a constant of this phase;
    // compute it once. The projector plays no part here.
    const Matrix h_train = forward(frozen_encoder, train.features);
    const Matrix h_val = forward(frozen_encoder, val.features);

    Mlp regressor = Mlp::make({frozen_encoder.output_dim(), kHiddenDim, 1}, Activation::Identity,
                              derive_seed(plan.seed, "init.regressor"));
    AdamState opt = AdamState::for_net(regressor, plan.finetune.learning_rate);

    Rng batch_rng(derive_seed(plan.seed, "finetune.batching"));
    EarlyStopper stopper(plan.finetune.patience);
    Mlp best = regressor;

    std::vector<std::size_t> order(train.n_rows());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    const auto mse_on = [&](const Matrix& h, const std::vector<double>& labels) {
        const Matrix pred = forward(regressor, h);
        double sum = 0.0;
        for (std::size_t r = 0; r < pred.rows(); ++r) {
            const double diff = pred(r, 0) - labels[r];
            sum += diff * diff;
        }
        return sum / static_cast<double>(pred.rows());
    };

    for (std::size_t epoch = 1; epoch <= plan.finetune.max_epochs; ++epoch) {
        batch_rng.shuffle(order);
        double train_loss_sum = 0.0;
        std::size_t seen = 0;
        for (const auto& rows : make_batches(order, plan.finetune.batch_size, /*drop_partial=*/false)) {
            Matrix hb = gather_rows(h_train, rows);
            std::vector<double> yb = gather_labels(train, rows);
            ForwardCache cache;
            Matrix pred = forward(regressor, hb, &cache);
            const double inv_b = 1.0 / static_cast<double>(rows.size());
            Matrix grad(pred.rows(), 1);
            double batch_loss = 0.0;
            for (std::size_t r = 0; r < pred.rows(); ++r) {
                const double diff = pred(r, 0) - yb[r];
                batch_loss += diff * diff;
                grad(r, 0) = 2.0 * diff * inv_b;
            }
            batch_loss *= inv_b;
            BackwardResult back = backward(regressor, cache, grad);
            adam_step(regressor, back.grads, opt);
            train_loss_sum += batch_loss * static_cast<double>(rows.size());
            seen += rows.size();
        }
        const double train_loss = train_loss_sum / static_cast<double>(seen);
        const double val_loss = mse_on(h_val, val.labels);

        report.history.push_back({epoch, "finetune", train_loss, val_loss});
        if (stopper.observe(val_loss)) best = regressor;
        if (stopper.should_stop()) break;
    }
    report.finetune_best_epoch = stopper.best_epoch();
    report.finetune_stop_epoch = stopper.epochs_seen();
    report.final_val_loss = stopper.best_loss();
    return best;
}

namespace {

// BaselineMlp: identical structure, no pretraining; encoder and regressor are
// trained jointly with MSE.
void train_baseline(Mlp& encoder, Mlp& regressor, const Dataset& train, const Dataset& val,
                    const TrainPlan& plan, TrainReport& report) {
    AdamState encoder_opt = AdamState::for_net(encoder, plan.finetune.learning_rate);
    AdamState regressor_opt = AdamState::for_net(regressor, plan.finetune.learning_rate);
    Rng batch_rng(derive_seed(plan.seed, "finetune.batching"));
    EarlyStopper stopper(plan.finetune.patience);
    Mlp best_encoder = encoder;
    Mlp best_regressor = regressor;

    std::vector<std::size_t> order(train.n_rows());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    const auto val_mse = [&]() {
        const Matrix pred = forward(regressor, forward(encoder, val.features));
        double sum = 0.0;
        for (std::size_t r = 0; r < pred.rows(); ++r) {
            const double diff = pred(r, 0) - val.labels[r];
            sum += diff * diff;
        }
        return sum / static_cast<double>(pred.rows());
    };

    for (std::size_t epoch = 1; epoch <= plan.finetune.max_epochs; ++epoch) {
        batch_rng.shuffle(order);
        double train_loss_sum = 0.0;
        std::size_t seen = 0;
        for (const auto& rows : make_batches(order, plan.finetune.batch_size, /*drop_partial=*/false)) {
            Matrix xb = gather_rows(train.features, rows);
            std::vector<double> yb = gather_labels(train, rows);
            ForwardCache enc_cache, reg_cache;
            Matrix h = forward(encoder, xb, &enc_cache);
            Matrix pred = forward(regressor, h, &reg_cache);
            const double inv_b = 1.0 / static_cast<double>(rows.size());
            Matrix grad(pred.rows(), 1);
            double batch_loss = 0.0;
            for (std::size_t r = 0; r < pred.rows(); ++r) {
                const double diff = pred(r, 0) - yb[r];
                batch_loss += diff * diff;
                grad(r, 0) = 2.0 * diff * inv_b;
            }
            batch_loss *= inv_b;
            BackwardResult reg_back = backward(regressor, reg_cache, grad);
            BackwardResult enc_back = backward(encoder, enc_cache, reg_back.input_grad);
            adam_step(regressor, reg_back.grads, regressor_opt);
            adam_step(encoder, enc_back.grads, encoder_opt);
            train_loss_sum += batch_loss * static_cast<double>(rows.size());
            seen += rows.size();
        }
        const double train_loss = train_loss_sum / static_cast<double>(seen);
        const double val_loss = val_mse();
        report.history.push_back({epoch, "finetune", train_loss, val_loss});
        if (stopper.observe(val_loss)) {
            best_encoder = encoder;
            best_regressor = regressor;
        }
        if (stopper.should_stop()) break;
    }
    encoder = best_encoder;
    regressor = best_regressor;
    report.finetune_best_epoch = stopper.best_epoch();
    report.finetune_stop_epoch = stopper.epochs_seen();
    report.final_val_loss = stopper.best_loss();
}

}  // namespace

TrainOutcome train_scr(const Dataset& dataset, const SplitIndices& split, const TrainPlan& plan) {
    validate_plan(plan);
    if (dataset.standardized) {
        throw ContractError("train_scr: expected a raw dataset; standardization happens inside");
    }
    const auto t0 = std::chrono::steady_clock::now();

    TrainOutcome outcome;
    outcome.bundle.standardizer = fit_standardizer(dataset, split.train);
    const Dataset standardized = apply(outcome.bundle.standardizer, dataset);
    const Dataset train = take_rows(standardized, split.train);
    const Dataset val = take_rows(standardized, split.val);
    outcome.bundle.modality_tag = dataset.modality_tag;

    if (plan.ablation == Ablation::BaselineMlp) {
        outcome.bundle.encoder =
            Mlp::make({dataset.n_features(), kHiddenDim, kHiddenDim, kHiddenDim, kHiddenDim},
                      Activation::ReLU, derive_seed(plan.seed, "init.encoder"));
        outcome.bundle.projector = Mlp::make({kHiddenDim, kHiddenDim, kHiddenDim}, Activation::Identity,
                                             derive_seed(plan.seed, "init.projector"));
        outcome.bundle.regressor = Mlp::make({kHiddenDim, kHiddenDim, 1}, Activation::Identity,
                                             derive_seed(plan.seed, "init.regressor"));
        train_baseline(outcome.bundle.encoder, outcome.bundle.regressor, train, val, plan,
                       outcome.report);
    } else {
        PretrainResult pre = pretrain(train, val, plan, outcome.report);
        outcome.bundle.encoder = std::move(pre.encoder);
        outcome.bundle.projector = std::move(pre.projector);
        outcome.bundle.regressor = finetune(outcome.bundle.encoder, train, val, plan, outcome.report);
    }

    outcome.report.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return outcome;
}

std::vector<double> predict(const ModelBundle& bundle, const Dataset& dataset) {
    if (!dataset.standardized) {
        throw ContractError("predict: dataset must be standardized with the bundle's standardizer");
    }
    if (dataset.n_features() != bundle.encoder.input_dim()) {
        throw ContractError("predict: dataset has " + std::to_string(dataset.n_features()) +
                            " features, encoder expects " + std::to_string(bundle.encoder.input_dim()));
    }
    const Matrix pred = forward(bundle.regressor, forward(bundle.encoder, dataset.features));
    std::vector<double> out(pred.rows());
    for (std::size_t r = 0; r < pred.rows(); ++r) out[r] = pred(r, 0);
    return out;
}

std::vector<double> ensemble_predict(const std::vector<ModelBundle>& bundles,
                                     const std::vector<Dataset>& datasets) {
    if (bundles.empty()) throw ContractError("ensemble_predict: no bundles");
    if (bundles.size() != datasets.size()) {
        throw ContractError("ensemble_predict: bundle/dataset count mismatch");
    }
    const std::size_t n = datasets.front().n_rows();
    for (const Dataset& ds : datasets) {
        if (ds.n_rows() != n) throw ContractError("ensemble_predict: datasets differ in row count");
    }
    std::vector<double> sum(n, 0.0);
    for (std::size_t b = 0; b < bundles.size(); ++b) {
        const std::vector<double> pred = predict(bundles[b], datasets[b]);
        for (std::size_t i = 0; i < n; ++i) sum[i] += pred[i];
    }
    const double inv = 1.0 / static_cast<double>(bundles.size());
    for (double& v : sum) v *= inv;
    return sum;
}

// ---------------------------------------------------------------------------
// Checkpoint format: whitespace-delimited text, one self-describing section
// per network, values printed with 17 significant digits so reload is
// value-exact.

namespace {

void write_values(std::ofstream& out, const double* values, std::size_t count) {
    char buf[40];
    for (std::size_t i = 0; i < count; ++i) {
        std::snprintf(buf, sizeof buf, "%.17g", values[i]);
        out << buf << (i + 1 == count ? '\n' : ' ');
    }
    if (count == 0) out << '\n';
}

void write_network(std::ofstream& out, const std::string& name, const Mlp& net) {
    out << "network " << name << " layers " << net.layer_count() << '\n';
    for (const DenseLayer& layer : net.layers()) {
        out << "layer " << layer.out_dim() << ' ' << layer.in_dim() << ' '
            << (layer.activation == Activation::ReLU ? "relu" : "identity") << '\n';
        out << "weights ";
        write_values(out, layer.weights.data(), layer.weights.size());
        out << "bias ";
        write_values(out, layer.bias.data(), layer.bias.size());
    }
}

// Tracks byte offsets so malformed files are reported precisely.
class CheckpointReader {
public:
    explicit CheckpointReader(const std::string& path) : path_(path) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw DataError("cannot open checkpoint: " + path);
        std::ostringstream ss;
        ss << in.rdbuf();
        text_ = ss.str();
    }

    std::string token() {
        skip_space();
        if (pos_ >= text_.size()) fail("unexpected end of file");
        const std::size_t start = pos_;
        while (pos_ < text_.size() && !std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
        return text_.substr(start, pos_ - start);
    }

    void expect(const std::string& word) {
        const std::size_t at = next_offset();
        const std::string got = token();
        if (got != word) {
            fail_at(at, "expected `" + word + "`, found `" + got + "`");
        }
    }

    std::size_t count(const std::string& what) {
        const std::size_t at = next_offset();
        const std::string tok = token();
        char* end = nullptr;
        const unsigned long long v = std::strtoull(tok.c_str(), &end, 10);
        if (end == tok.c_str() || *end != '\0') fail_at(at, "expected " + what + " count");
        return static_cast<std::size_t>(v);
    }

    double value() {
        const std::size_t at = next_offset();
        const std::string tok = token();
        char* end = nullptr;
        const double v = std::strtod(tok.c_str(), &end);
        if (end == tok.c_str() || *end != '\0') fail_at(at, "expected a number, found `" + tok + "`");
        return v;
    }

    std::size_t next_offset() {
        skip_space();
        return pos_;
    }

    [[noreturn]] void fail(const std::string& message) { fail_at(pos_, message); }

private:
    [[noreturn]] void fail_at(std::size_t offset, const std::string& message) {
        throw DataError("checkpoint parse error at byte " + std::to_string(offset) + " in " + path_ +
                        ": " + message);
    }

    void skip_space() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }

    std::string path_;
    std::string text_;
    std::size_t pos_ = 0;
};

Mlp read_network(CheckpointReader& reader, const std::string& name) {
    reader.expect("network");
    reader.expect(name);
    reader.expect("layers");
    const std::size_t n_layers = reader.count("layer");
    if (n_layers == 0) reader.fail("network must have at least one layer");
    std::vector<DenseLayer> layers;
    layers.reserve(n_layers);
    for (std::size_t li = 0; li < n_layers; ++li) {
        reader.expect("layer");
        const std::size_t out_dim = reader.count("out_dim");
        const std::size_t in_dim = reader.count("in_dim");
        const std::size_t at = reader.next_offset();
        const std::string act = reader.token();
        DenseLayer layer;
        if (act == "relu") {
            layer.activation = Activation::ReLU;
        } else if (act == "identity") {
            layer.activation = Activation::Identity;
        } else {
            reader.fail("unknown activation `" + act + "` at byte " + std::to_string(at));
        }
        layer.weights = Matrix(out_dim, in_dim);
        reader.expect("weights");
        for (std::size_t i = 0; i < layer.weights.size(); ++i) layer.weights.data()[i] = reader.value();
        layer.bias.resize(out_dim);
        reader.expect("bias");
        for (std::size_t i = 0; i < out_dim; ++i) layer.bias[i] = reader.value();
        layers.push_back(std::move(layer));
    }
    return Mlp(std::move(layers));
}

}  // namespace

void save_bundle(const ModelBundle& bundle, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot open checkpoint for writing: " + path);
    out << "scr-checkpoint v1\n";
    out << "modality " << (bundle.modality_tag.empty() ? "-" : bundle.modality_tag) << '\n';
    const std::size_t d = bundle.standardizer.n_features();
    out << "standardizer " << d << '\n';
    out << "mean ";
    write_values(out, bundle.standardizer.mean.data(), d);
    out << "std ";
    write_values(out, bundle.standardizer.std_dev.data(), d);
    out << "constant ";
    for (std::size_t i = 0; i < d; ++i) {
        out << (bundle.standardizer.constant[i] ? 1 : 0) << (i + 1 == d ? '\n' : ' ');
    }
    if (d == 0) out << '\n';
    write_network(out, "encoder", bundle.encoder);
    write_network(out, "projector", bundle.projector);
    write_network(out, "regressor", bundle.regressor);
    out << "end\n";
    if (!out) throw DataError("write failed: " + path);
}

ModelBundle load_bundle(const std::string& path) {
    CheckpointReader reader(path);
    reader.expect("scr-checkpoint");
    reader.expect("v1");
    reader.expect("modality");
    ModelBundle bundle;
    bundle.modality_tag = reader.token();
    if (bundle.modality_tag == "-") bundle.modality_tag.clear();
    reader.expect("standardizer");
    const std::size_t d = reader.count("feature");
    bundle.standardizer.mean.resize(d);
    bundle.standardizer.std_dev.resize(d);
    bundle.standardizer.constant.resize(d);
    reader.expect("mean");
    for (std::size_t i = 0; i < d; ++i) bundle.standardizer.mean[i] = reader.value();
    reader.expect("std");
    for (std::size_t i = 0; i < d; ++i) bundle.standardizer.std_dev[i] = reader.value();
    reader.expect("constant");
    for (std::size_t i = 0; i < d; ++i) {
        const double v = reader.value();
        if (v != 0.0 && v != 1.0) reader.fail("constant flags must be 0 or 1");
        bundle.standardizer.constant[i] = v != 0.0;
    }
    bundle.encoder = read_network(reader, "encoder");
    bundle.projector = read_network(reader, "projector");
    bundle.regressor = read_network(reader, "regressor");
    reader.expect("end");
    return bundle;
}

}  // namespace scr
