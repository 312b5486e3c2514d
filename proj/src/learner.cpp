#include "vceval/learner.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "vceval/error.hpp"
#include "vceval/log.hpp"
#include "vceval/rng.hpp"

namespace vceval {

std::string to_string(Stage s) {
  switch (s) {
    case Stage::unlearn: return "unlearn";
    case Stage::pretrain: return "pretrain";
    case Stage::finetune: return "finetune";
  }
  return "unknown";
}

void validate(const ModelConfig& c) {
  auto fail = [](const std::string& what) { throw Error(ErrorCode::ConfigInvalid, what); };
  if (c.embed_dim < 1 || c.layers < 1 || c.heads < 1 || c.context_len < 2 || c.ffn_mult < 1) {
    fail("embed_dim, layers, heads, ffn_mult must be >= 1 and context_len >= 2");
  }
  if (c.embed_dim % c.heads != 0) {
    fail("embed_dim " + std::to_string(c.embed_dim) + " not divisible by heads " + std::to_string(c.heads));
  }
  if (!(c.lr_unlearn > 0 && c.lr_pretrain > 0 && c.lr_finetune > 0)) fail("learning rates must be > 0");
  if (c.epochs_unlearn < 1 || c.epochs_pretrain < 1 || c.epochs_finetune < 1) fail("epochs must be >= 1");
  if (c.batch_size < 1) fail("batch_size must be >= 1");
  if (!(c.tolerance_uniform > 0) || !(c.unlearn_loss_tolerance > 0)) fail("tolerances must be > 0");
  if (!(c.init_scale >= 0)) fail("init_scale must be >= 0");
}

bool ModelState::fully_trained() const {
  bool pretrained = false;
  for (const auto& r : stage_log) {
    if (r.stage == Stage::pretrain) pretrained = true;
    if (r.stage == Stage::finetune && pretrained) return true;
  }
  return false;
}

std::size_t parameter_count(const ModelConfig& config, std::size_t vocab_size) {
  return static_cast<std::size_t>(ParameterLayout(config, vocab_size).total);
}

ModelState init_model(const ModelConfig& config, Vocabulary vocab) {
  validate(config);
  ModelState m{config, std::move(vocab), {}, {}};
  const ParameterLayout layout(config, m.vocab.size());
  m.parameters.resize(layout.total);
  Rng rng(derive_seed(config.seed, 0));
  for (Eigen::Index i = 0; i < layout.total; ++i) m.parameters(i) = rng.uniform(-config.init_scale, config.init_scale);
  for (const auto& [off, n] : layout.bias_blocks()) m.parameters.segment(off, n).setZero();
  for (const auto& [off, n] : layout.gain_blocks()) m.parameters.segment(off, n).setOnes();
  return m;
}

std::size_t EncodedQuestion::encoded_length() const {
  std::size_t longest = 0;
  for (const auto& o : options) longest = std::max(longest, o.size());
  return stem.size() + 1 + longest;
}

EncodedQuestion encode_question(const Vocabulary& vocab, const ExamQuestion& question, int context_len) {
  EncodedQuestion e;
  e.stem = vocab.encode_stem(question.stem);
  for (std::size_t i = 0; i < kOptionCount; ++i) {
    e.options[i] = vocab.encode(question.options[i]);
    if (e.options[i].empty()) e.options[i].push_back(Vocabulary::kUnk);
  }
  e.answer_index = question.answer_index;
  if (e.encoded_length() > static_cast<std::size_t>(context_len)) {
    throw Error(ErrorCode::ContextOverflow, "question " + question.question_id + " encodes to " +
                                                std::to_string(e.encoded_length()) + " tokens, context is " +
                                                std::to_string(context_len));
  }
  return e;
}

OptionDistribution distribution_from_scores(const std::array<double, kOptionCount>& scores) {
  const double m = *std::max_element(scores.begin(), scores.end());
  OptionDistribution d;
  double z = 0.0;
  for (std::size_t i = 0; i < kOptionCount; ++i) z += d.probabilities[i] = std::exp(scores[i] - m);
  for (auto& p : d.probabilities) p /= z;
  d.chosen_index = static_cast<std::size_t>(std::max_element(d.probabilities.begin(), d.probabilities.end()) -
                                            d.probabilities.begin());
  return d;
}

namespace {

/// One scored option: forward pass plus per-position log-probabilities of the option tokens.
struct OptionPass {
  ForwardCache cache;
  std::vector<Eigen::Index> rows;
  std::vector<TokenId> targets;
  RowMatrix log_probs;
  double score = 0.0;
};

void log_softmax_rows(RowMatrix& logits) {
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    const double m = logits.row(r).maxCoeff();
    const double lse = m + std::log((logits.row(r).array() - m).exp().sum());
    logits.row(r).array() -= lse;
  }
}

void score_option(const Transformer& net, const Eigen::VectorXd& theta, const std::vector<TokenId>& stem,
                  const std::vector<TokenId>& option, OptionPass& pass) {
  std::vector<TokenId> seq(stem);
  seq.push_back(Vocabulary::kSep);
  seq.insert(seq.end(), option.begin(), option.end() - 1);
  net.forward(theta, seq, pass.cache);
  pass.rows.resize(option.size());
  std::iota(pass.rows.begin(), pass.rows.end(), static_cast<Eigen::Index>(stem.size()));
  pass.targets = option;
  pass.log_probs = net.logits(theta, pass.cache, pass.rows);
  log_softmax_rows(pass.log_probs);
  double sum = 0.0;
  for (std::size_t k = 0; k < option.size(); ++k) sum += pass.log_probs(static_cast<Eigen::Index>(k), option[k]);
  pass.score = sum / static_cast<double>(option.size());
}

/// d(score)/d(logits) scaled by `weight`, then backpropagated into grad.
void backprop_option(const Transformer& net, const Eigen::VectorXd& theta, const OptionPass& pass, double weight,
                     Eigen::VectorXd& grad) {
  if (weight == 0.0) return;
  const auto m = static_cast<double>(pass.targets.size());
  RowMatrix dlogits = -pass.log_probs.array().exp() * (weight / m);
  for (std::size_t k = 0; k < pass.targets.size(); ++k) {
    dlogits(static_cast<Eigen::Index>(k), pass.targets[k]) += weight / m;
  }
  net.backward(theta, pass.cache, pass.rows, dlogits, grad);
}

std::array<double, kOptionCount> softmax(const std::array<OptionPass, kOptionCount>& passes) {
  std::array<double, kOptionCount> scores{};
  for (std::size_t i = 0; i < kOptionCount; ++i) scores[i] = passes[i].score;
  return distribution_from_scores(scores).probabilities;
}

std::array<double, kOptionCount> score_question(const Transformer& net, const Eigen::VectorXd& theta,
                                                const EncodedQuestion& q,
                                                std::array<OptionPass, kOptionCount>& passes) {
  for (std::size_t i = 0; i < kOptionCount; ++i) score_option(net, theta, q.stem, q.options[i], passes[i]);
  return softmax(passes);
}

std::size_t argmax(const std::array<double, kOptionCount>& p) {
  return static_cast<std::size_t>(std::max_element(p.begin(), p.end()) - p.begin());
}

void clip_and_step(Eigen::VectorXd& theta, Eigen::VectorXd& grad, double lr, double clip) {
  if (clip > 0.0) {
    const double norm = grad.norm();
    if (norm > clip) grad *= clip / norm;
  }
  theta.noalias() -= lr * grad;
}

void require_finite(const Eigen::VectorXd& theta, Stage stage) {
  if (!theta.allFinite()) {
    throw Error(ErrorCode::InvariantViolation, "non-finite parameters after " + to_string(stage));
  }
}

std::vector<EncodedQuestion> encode_all(const ModelState& model, const ExamSet& exam) {
  std::vector<EncodedQuestion> out;
  out.reserve(exam.size());
  for (const auto& q : exam.questions()) out.push_back(encode_question(model.vocab, q, model.config.context_len));
  return out;
}

double accuracy(const Transformer& net, const Eigen::VectorXd& theta, std::span<const EncodedQuestion> qs) {
  std::array<OptionPass, kOptionCount> passes;
  std::size_t correct = 0;
  for (const auto& q : qs) correct += argmax(score_question(net, theta, q, passes)) == q.answer_index ? 1 : 0;
  return qs.empty() ? 0.0 : static_cast<double>(correct) / static_cast<double>(qs.size());
}

/// Visits index batches of a per-epoch seeded shuffle.
template <typename Fn>
void for_each_batch(std::size_t n, int batch_size, Rng& rng, Fn fn) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  rng.shuffle(std::span<std::size_t>(order));
  for (std::size_t b = 0; b < n; b += static_cast<std::size_t>(batch_size)) {
    const auto e = std::min(n, b + static_cast<std::size_t>(batch_size));
    fn(std::span<const std::size_t>(order).subspan(b, e - b));
  }
}

void require_log(const ModelState& model, Stage stage) {
  const auto& log = model.stage_log;
  bool ok = false;
  switch (stage) {
    case Stage::unlearn:
      ok = log.empty() || (model.config.repeat_unlearn && log.size() == 2 && log[1].stage == Stage::pretrain);
      break;
    case Stage::pretrain:
      ok = log.size() == 1 && log[0].stage == Stage::unlearn;
      break;
    case Stage::finetune:
      ok = (log.size() == 2 && log[1].stage == Stage::pretrain && !model.config.repeat_unlearn) ||
           (log.size() == 3 && log[2].stage == Stage::unlearn && model.config.repeat_unlearn);
      break;
  }
  if (!ok) {
    std::string have;
    for (const auto& r : log) have += (have.empty() ? "" : ",") + to_string(r.stage);
    throw Error(ErrorCode::StageOrder, to_string(stage) + " cannot follow [" + have + "]");
  }
}

}  // namespace

OptionDistribution option_distribution(const ModelState& model, const EncodedQuestion& question) {
  const auto net = model.network();
  std::array<OptionPass, kOptionCount> passes;
  OptionDistribution d;
  d.probabilities = score_question(net, model.parameters, question, passes);
  d.chosen_index = argmax(d.probabilities);
  return d;
}

OptionDistribution option_distribution(const ModelState& model, const ExamQuestion& question) {
  return option_distribution(model, encode_question(model.vocab, question, model.config.context_len));
}

std::vector<std::vector<TokenId>> pretrain_windows(std::span<const TokenId> tokens, int context_len) {
  std::vector<std::vector<TokenId>> out;
  const auto n = tokens.size();
  const auto len = static_cast<std::size_t>(context_len);
  const auto stride = std::max<std::size_t>(1, len / 2);
  if (n < 2) return out;
  for (std::size_t start = 0;; start += stride) {
    const auto end = std::min(n, start + len);
    out.emplace_back(tokens.begin() + static_cast<std::ptrdiff_t>(start), tokens.begin() + static_cast<std::ptrdiff_t>(end));
    if (end == n) break;
  }
  return out;
}

namespace objectives {

double unlearn(const Transformer& net, const Eigen::VectorXd& theta, std::span<const EncodedQuestion> questions,
               Eigen::VectorXd* grad) {
  if (questions.empty()) return 0.0;
  const double inv_n = 1.0 / static_cast<double>(questions.size());
  std::array<OptionPass, kOptionCount> passes;
  double loss = 0.0;
  for (const auto& q : questions) {
    const auto p = score_question(net, theta, q, passes);
    double sum_sq = 0.0;
    for (double v : p) sum_sq += v * v;
    loss += sum_sq * inv_n;
    if (grad != nullptr) {
      // d(sum_i P_i^2)/d(s_j) = 2 P_j (P_j - sum_i P_i^2)
      for (std::size_t j = 0; j < kOptionCount; ++j) {
        backprop_option(net, theta, passes[j], inv_n * 2.0 * p[j] * (p[j] - sum_sq), *grad);
      }
    }
  }
  return loss;
}

double pretrain(const Transformer& net, const Eigen::VectorXd& theta, std::span<const std::vector<TokenId>> windows,
                Eigen::VectorXd* grad) {
  if (windows.empty()) return 0.0;
  const double inv_w = 1.0 / static_cast<double>(windows.size());
  ForwardCache cache;
  double loss = 0.0;
  for (const auto& w : windows) {
    net.forward(theta, w, cache);
    const auto m = static_cast<Eigen::Index>(w.size()) - 1;
    std::vector<Eigen::Index> rows(static_cast<std::size_t>(m));
    std::iota(rows.begin(), rows.end(), Eigen::Index{0});
    RowMatrix lp = net.logits(theta, cache, rows);
    log_softmax_rows(lp);
    const double scale = inv_w / static_cast<double>(m);
    for (Eigen::Index r = 0; r < m; ++r) loss -= lp(r, w[static_cast<std::size_t>(r + 1)]) * scale;
    if (grad != nullptr) {
      RowMatrix dlogits = lp.array().exp() * scale;
      for (Eigen::Index r = 0; r < m; ++r) dlogits(r, w[static_cast<std::size_t>(r + 1)]) -= scale;
      net.backward(theta, cache, rows, dlogits, *grad);
    }
  }
  return loss;
}

double finetune(const Transformer& net, const Eigen::VectorXd& theta, std::span<const EncodedQuestion> questions,
                Eigen::VectorXd* grad) {
  if (questions.empty()) return 0.0;
  const double inv_n = 1.0 / static_cast<double>(questions.size());
  std::array<OptionPass, kOptionCount> passes;
  double loss = 0.0;
  for (const auto& q : questions) {
    const auto p = score_question(net, theta, q, passes);
    loss -= std::log(p[q.answer_index]) * inv_n;
    if (grad != nullptr) {
      // d(-log P_y)/d(s_j) = P_j - [j == y]
      for (std::size_t j = 0; j < kOptionCount; ++j) {
        backprop_option(net, theta, passes[j], inv_n * (p[j] - (j == q.answer_index ? 1.0 : 0.0)), *grad);
      }
    }
  }
  return loss;
}

}  // namespace objectives

StageReport train_unlearn(ModelState& model, const ExamSet& exam) {
  require_log(model, Stage::unlearn);
  if (exam.empty()) throw Error(ErrorCode::EmptyExamSet, "unlearning needs exam questions");
  const auto questions = encode_all(model, exam);
  const auto net = model.network();
  const auto& cfg = model.config;

  auto uniformity = [&](double& max_dev, double& max_excess) {
    std::array<OptionPass, kOptionCount> passes;
    max_dev = 0.0;
    max_excess = 0.0;
    for (const auto& q : questions) {
      const auto p = score_question(net, model.parameters, q, passes);
      double sum_sq = 0.0;
      for (double v : p) {
        max_dev = std::max(max_dev, std::abs(v - 0.25));
        sum_sq += v * v;
      }
      max_excess = std::max(max_excess, sum_sq - 0.25);
    }
  };

  StageReport report;
  report.stage = Stage::unlearn;
  Eigen::VectorXd grad(model.parameters.size());
  double max_dev = 0.0, max_excess = 0.0;
  report.converged = false;
  for (int epoch = 0; epoch < cfg.epochs_unlearn; ++epoch) {
    uniformity(max_dev, max_excess);
    if (max_dev < cfg.tolerance_uniform && max_excess < cfg.unlearn_loss_tolerance) {
      report.converged = true;
      break;
    }
    grad.setZero();
    const double loss = objectives::unlearn(net, model.parameters, questions, &grad);
    if (epoch == 0) report.initial_loss = loss;
    report.epoch_losses.push_back(loss);
    clip_and_step(model.parameters, grad, cfg.lr_unlearn, cfg.grad_clip);
    ++report.epochs_run;
  }
  if (!report.converged) {
    uniformity(max_dev, max_excess);
    report.converged = max_dev < cfg.tolerance_uniform && max_excess < cfg.unlearn_loss_tolerance;
  }
  report.final_loss = objectives::unlearn(net, model.parameters, questions, nullptr);
  if (report.epoch_losses.empty()) report.initial_loss = report.final_loss;
  report.max_deviation = max_dev;
  require_finite(model.parameters, Stage::unlearn);
  if (!report.converged) {
    logger()->warn("DidNotConverge: unlearning stopped at deviation {:.4f} after {} epochs", max_dev,
                   report.epochs_run);
  }
  logger()->info("unlearn: {} epochs, loss {:.6f} -> {:.6f}, max |P-1/4| {:.5f}", report.epochs_run,
                 report.initial_loss, report.final_loss, max_dev);
  model.stage_log.push_back({Stage::unlearn, report.final_loss});
  return report;
}

StageReport train_pretrain(ModelState& model, const VideoCourse& course) {
  require_log(model, Stage::pretrain);
  const auto tokens = model.vocab.encode(course_text(course));
  if (tokens.size() < 2) throw Error(ErrorCode::EmptyCourse, course.course_id);
  const auto windows = pretrain_windows(tokens, model.config.context_len);
  const auto net = model.network();
  const auto& cfg = model.config;

  StageReport report;
  report.stage = Stage::pretrain;
  report.initial_loss = objectives::pretrain(net, model.parameters, windows, nullptr);
  Rng rng(derive_seed(cfg.seed, 2));
  Eigen::VectorXd grad(model.parameters.size());
  std::vector<std::vector<TokenId>> batch;
  for (int epoch = 0; epoch < cfg.epochs_pretrain; ++epoch) {
    double epoch_loss = 0.0;
    for_each_batch(windows.size(), cfg.batch_size, rng, [&](std::span<const std::size_t> idx) {
      batch.clear();
      for (auto i : idx) batch.push_back(windows[i]);
      grad.setZero();
      epoch_loss += objectives::pretrain(net, model.parameters, batch, &grad) * static_cast<double>(idx.size());
      clip_and_step(model.parameters, grad, cfg.lr_pretrain, cfg.grad_clip);
    });
    report.epoch_losses.push_back(epoch_loss / static_cast<double>(windows.size()));
    ++report.epochs_run;
    logger()->debug("pretrain epoch {}: loss {:.5f}", epoch, report.epoch_losses.back());
  }
  report.final_loss = objectives::pretrain(net, model.parameters, windows, nullptr);
  require_finite(model.parameters, Stage::pretrain);
  logger()->info("pretrain: {} windows, loss {:.5f} -> {:.5f}", windows.size(), report.initial_loss,
                 report.final_loss);
  model.stage_log.push_back({Stage::pretrain, report.final_loss});
  return report;
}

StageReport train_finetune(ModelState& model, const ExamSet& inclass) {
  require_log(model, Stage::finetune);
  if (inclass.empty()) throw Error(ErrorCode::EmptyExamSet, "fine-tuning needs in-class questions");
  for (const auto& q : inclass.questions()) {
    if (q.origin != QuestionOrigin::inclass) {
      throw Error(ErrorCode::InvariantViolation, "fine-tuning question " + q.question_id + " is not in-class");
    }
  }
  const auto questions = encode_all(model, inclass);
  const auto net = model.network();
  const auto& cfg = model.config;

  StageReport report;
  report.stage = Stage::finetune;
  report.initial_loss = objectives::finetune(net, model.parameters, questions, nullptr);
  report.accuracy_before = accuracy(net, model.parameters, questions);
  Rng rng(derive_seed(cfg.seed, 3));
  Eigen::VectorXd grad(model.parameters.size());
  std::vector<EncodedQuestion> batch;
  for (int epoch = 0; epoch < cfg.epochs_finetune; ++epoch) {
    double epoch_loss = 0.0;
    for_each_batch(questions.size(), cfg.batch_size, rng, [&](std::span<const std::size_t> idx) {
      batch.clear();
      for (auto i : idx) batch.push_back(questions[i]);
      grad.setZero();
      epoch_loss += objectives::finetune(net, model.parameters, batch, &grad) * static_cast<double>(idx.size());
      clip_and_step(model.parameters, grad, cfg.lr_finetune, cfg.grad_clip);
    });
    report.epoch_losses.push_back(epoch_loss / static_cast<double>(questions.size()));
    ++report.epochs_run;
    logger()->debug("finetune epoch {}: loss {:.5f}", epoch, report.epoch_losses.back());
  }
  report.final_loss = objectives::finetune(net, model.parameters, questions, nullptr);
  report.accuracy_after = accuracy(net, model.parameters, questions);
  require_finite(model.parameters, Stage::finetune);
  logger()->info("finetune: {} questions, loss {:.5f} -> {:.5f}, accuracy {:.3f} -> {:.3f}", questions.size(),
                 report.initial_loss, report.final_loss, report.accuracy_before, report.accuracy_after);
  model.stage_log.push_back({Stage::finetune, report.final_loss});
  return report;
}

}  // namespace vceval
