#include "vceval/transformer.hpp"

#include <cmath>
#include <limits>

#include "vceval/error.hpp"

namespace vceval {

namespace {

constexpr double kLayerNormEps = 1e-5;
constexpr double kGeluC = 0.7978845608028654;  // sqrt(2 / pi)
constexpr double kGeluA = 0.044715;

using ConstMap = Eigen::Map<const RowMatrix>;
using MutMap = Eigen::Map<RowMatrix>;
using ConstVecMap = Eigen::Map<const Eigen::RowVectorXd>;
using MutVecMap = Eigen::Map<Eigen::RowVectorXd>;

ConstMap block(const Eigen::VectorXd& v, Eigen::Index off, Eigen::Index rows, Eigen::Index cols) {
  return {v.data() + off, rows, cols};
}
MutMap block(Eigen::VectorXd& v, Eigen::Index off, Eigen::Index rows, Eigen::Index cols) {
  return {v.data() + off, rows, cols};
}
ConstVecMap vec(const Eigen::VectorXd& v, Eigen::Index off, Eigen::Index n) { return {v.data() + off, n}; }
MutVecMap vec(Eigen::VectorXd& v, Eigen::Index off, Eigen::Index n) { return {v.data() + off, n}; }

void layer_norm(const RowMatrix& x, const ConstVecMap& gain, const ConstVecMap& bias, RowMatrix& hat,
                Eigen::VectorXd& rstd, RowMatrix& out) {
  const auto d = static_cast<double>(x.cols());
  hat.resize(x.rows(), x.cols());
  rstd.resize(x.rows());
  for (Eigen::Index t = 0; t < x.rows(); ++t) {
    const double mu = x.row(t).sum() / d;
    const auto centered = (x.row(t).array() - mu).eval();
    const double var = centered.square().sum() / d;
    rstd(t) = 1.0 / std::sqrt(var + kLayerNormEps);
    hat.row(t) = centered.matrix() * rstd(t);
  }
  out = (hat.array().rowwise() * gain.array()).rowwise() + bias.array();
}

/// Returns d(loss)/d(x) and accumulates gain/bias gradients.
RowMatrix layer_norm_backward(const RowMatrix& dout, const RowMatrix& hat, const Eigen::VectorXd& rstd,
                              const ConstVecMap& gain, MutVecMap dgain, MutVecMap dbias) {
  dgain += (dout.array() * hat.array()).colwise().sum().matrix();
  dbias += dout.colwise().sum();
  const RowMatrix dhat = dout.array().rowwise() * gain.array();
  const auto d = static_cast<double>(dout.cols());
  RowMatrix dx(dout.rows(), dout.cols());
  for (Eigen::Index t = 0; t < dout.rows(); ++t) {
    const double mean_dhat = dhat.row(t).sum() / d;
    const double mean_dhat_hat = dhat.row(t).dot(hat.row(t)) / d;
    dx.row(t) = rstd(t) * (dhat.row(t).array() - mean_dhat - hat.row(t).array() * mean_dhat_hat).matrix();
  }
  return dx;
}

}  // namespace

ParameterLayout::ParameterLayout(const ModelConfig& config, std::size_t vocab_size)
    : vocab(static_cast<Eigen::Index>(vocab_size)),
      dim(config.embed_dim),
      ffn(static_cast<Eigen::Index>(config.embed_dim) * config.ffn_mult),
      context(config.context_len) {
  Eigen::Index at = 0;
  auto take = [&](Eigen::Index n) {
    const auto off = at;
    at += n;
    return off;
  };
  token_embedding = take(vocab * dim);
  position_embedding = take(context * dim);
  for (int l = 0; l < config.layers; ++l) {
    Layer layer{};
    layer.ln1_gain = take(dim);
    layer.ln1_bias = take(dim);
    layer.qkv_weight = take(dim * 3 * dim);
    layer.qkv_bias = take(3 * dim);
    layer.proj_weight = take(dim * dim);
    layer.proj_bias = take(dim);
    layer.ln2_gain = take(dim);
    layer.ln2_bias = take(dim);
    layer.ffn_in_weight = take(dim * ffn);
    layer.ffn_in_bias = take(ffn);
    layer.ffn_out_weight = take(ffn * dim);
    layer.ffn_out_bias = take(dim);
    layers.push_back(layer);
  }
  final_gain = take(dim);
  final_bias = take(dim);
  output_weight = take(dim * vocab);
  output_bias = take(vocab);
  total = at;
}

std::vector<std::pair<Eigen::Index, Eigen::Index>> ParameterLayout::gain_blocks() const {
  std::vector<std::pair<Eigen::Index, Eigen::Index>> out;
  for (const auto& l : layers) {
    out.emplace_back(l.ln1_gain, dim);
    out.emplace_back(l.ln2_gain, dim);
  }
  out.emplace_back(final_gain, dim);
  return out;
}

std::vector<std::pair<Eigen::Index, Eigen::Index>> ParameterLayout::bias_blocks() const {
  std::vector<std::pair<Eigen::Index, Eigen::Index>> out;
  for (const auto& l : layers) {
    out.emplace_back(l.ln1_bias, dim);
    out.emplace_back(l.qkv_bias, 3 * dim);
    out.emplace_back(l.proj_bias, dim);
    out.emplace_back(l.ln2_bias, dim);
    out.emplace_back(l.ffn_in_bias, ffn);
    out.emplace_back(l.ffn_out_bias, dim);
  }
  out.emplace_back(final_bias, dim);
  out.emplace_back(output_bias, vocab);
  return out;
}

Transformer::Transformer(const ModelConfig& config, std::size_t vocab_size)
    : heads_(config.heads), layout_(config, vocab_size) {}

void Transformer::forward(const Eigen::VectorXd& theta, std::span<const TokenId> tokens,
                          ForwardCache& cache) const {
  const auto T = static_cast<Eigen::Index>(tokens.size());
  const auto D = layout_.dim;
  const auto F = layout_.ffn;
  if (T == 0 || T > layout_.context) {
    throw Error(ErrorCode::ContextOverflow,
                "sequence of " + std::to_string(T) + " tokens vs context " + std::to_string(layout_.context));
  }
  const auto tok = block(theta, layout_.token_embedding, layout_.vocab, D);
  const auto pos = block(theta, layout_.position_embedding, layout_.context, D);

  cache.tokens.assign(tokens.begin(), tokens.end());
  cache.layers.resize(layout_.layers.size());
  RowMatrix x(T, D);
  for (Eigen::Index t = 0; t < T; ++t) x.row(t) = tok.row(tokens[static_cast<std::size_t>(t)]) + pos.row(t);

  const auto dh = D / heads_;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  for (std::size_t l = 0; l < layout_.layers.size(); ++l) {
    const auto& p = layout_.layers[l];
    auto& c = cache.layers[l];
    c.input = x;
    layer_norm(x, vec(theta, p.ln1_gain, D), vec(theta, p.ln1_bias, D), c.ln1_hat, c.ln1_rstd, c.ln1_out);
    c.qkv = (c.ln1_out * block(theta, p.qkv_weight, D, 3 * D)).rowwise() + vec(theta, p.qkv_bias, 3 * D);
    c.attn_out.resize(T, D);
    c.probs.resize(static_cast<std::size_t>(heads_));
    for (int h = 0; h < heads_; ++h) {
      const auto q = c.qkv.middleCols(h * dh, dh);
      const auto k = c.qkv.middleCols(D + h * dh, dh);
      const auto v = c.qkv.middleCols(2 * D + h * dh, dh);
      RowMatrix s = (q * k.transpose()) * scale;
      for (Eigen::Index i = 0; i < T; ++i) {
        const double m = s.row(i).head(i + 1).maxCoeff();
        s.row(i).head(i + 1) = (s.row(i).head(i + 1).array() - m).exp().matrix();
        s.row(i).head(i + 1) /= s.row(i).head(i + 1).sum();
        s.row(i).tail(T - i - 1).setZero();
      }
      c.attn_out.middleCols(h * dh, dh) = s * v;
      c.probs[static_cast<std::size_t>(h)] = std::move(s);
    }
    c.mid = x + ((c.attn_out * block(theta, p.proj_weight, D, D)).rowwise() + vec(theta, p.proj_bias, D));
    layer_norm(c.mid, vec(theta, p.ln2_gain, D), vec(theta, p.ln2_bias, D), c.ln2_hat, c.ln2_rstd, c.ln2_out);
    c.pre_act = (c.ln2_out * block(theta, p.ffn_in_weight, D, F)).rowwise() + vec(theta, p.ffn_in_bias, F);
    c.act = c.pre_act.unaryExpr([](double u) {
      return 0.5 * u * (1.0 + std::tanh(kGeluC * (u + kGeluA * u * u * u)));
    });
    x = c.mid + ((c.act * block(theta, p.ffn_out_weight, F, D)).rowwise() + vec(theta, p.ffn_out_bias, D));
  }
  layer_norm(x, vec(theta, layout_.final_gain, D), vec(theta, layout_.final_bias, D), cache.final_hat,
             cache.final_rstd, cache.final_out);
}

RowMatrix Transformer::logits(const Eigen::VectorXd& theta, const ForwardCache& cache,
                              std::span<const Eigen::Index> rows) const {
  RowMatrix hidden(static_cast<Eigen::Index>(rows.size()), layout_.dim);
  for (std::size_t r = 0; r < rows.size(); ++r) hidden.row(static_cast<Eigen::Index>(r)) = cache.final_out.row(rows[r]);
  return (hidden * block(theta, layout_.output_weight, layout_.dim, layout_.vocab)).rowwise() +
         vec(theta, layout_.output_bias, layout_.vocab);
}

void Transformer::backward(const Eigen::VectorXd& theta, const ForwardCache& cache,
                           std::span<const Eigen::Index> rows, const RowMatrix& dlogits,
                           Eigen::VectorXd& grad) const {
  const auto T = static_cast<Eigen::Index>(cache.tokens.size());
  const auto D = layout_.dim;
  const auto F = layout_.ffn;
  const auto V = layout_.vocab;

  // Output projection.
  RowMatrix hidden(static_cast<Eigen::Index>(rows.size()), D);
  for (std::size_t r = 0; r < rows.size(); ++r) hidden.row(static_cast<Eigen::Index>(r)) = cache.final_out.row(rows[r]);
  block(grad, layout_.output_weight, D, V) += hidden.transpose() * dlogits;
  vec(grad, layout_.output_bias, V) += dlogits.colwise().sum();
  const RowMatrix dhidden = dlogits * block(theta, layout_.output_weight, D, V).transpose();
  RowMatrix dfinal = RowMatrix::Zero(T, D);
  for (std::size_t r = 0; r < rows.size(); ++r) dfinal.row(rows[r]) += dhidden.row(static_cast<Eigen::Index>(r));

  RowMatrix dx = layer_norm_backward(dfinal, cache.final_hat, cache.final_rstd, vec(theta, layout_.final_gain, D),
                                     vec(grad, layout_.final_gain, D), vec(grad, layout_.final_bias, D));

  const auto dh = D / heads_;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  for (auto l = static_cast<std::ptrdiff_t>(layout_.layers.size()) - 1; l >= 0; --l) {
    const auto& p = layout_.layers[static_cast<std::size_t>(l)];
    const auto& c = cache.layers[static_cast<std::size_t>(l)];

    // Feed-forward residual branch.
    block(grad, p.ffn_out_weight, F, D) += c.act.transpose() * dx;
    vec(grad, p.ffn_out_bias, D) += dx.colwise().sum();
    const RowMatrix dact = dx * block(theta, p.ffn_out_weight, F, D).transpose();
    const RowMatrix dpre = dact.binaryExpr(c.pre_act, [](double g, double u) {
      const double inner = kGeluC * (u + kGeluA * u * u * u);
      const double th = std::tanh(inner);
      const double dinner = kGeluC * (1.0 + 3.0 * kGeluA * u * u);
      return g * (0.5 * (1.0 + th) + 0.5 * u * (1.0 - th * th) * dinner);
    });
    block(grad, p.ffn_in_weight, D, F) += c.ln2_out.transpose() * dpre;
    vec(grad, p.ffn_in_bias, F) += dpre.colwise().sum();
    const RowMatrix dln2 = dpre * block(theta, p.ffn_in_weight, D, F).transpose();
    RowMatrix dmid = dx + layer_norm_backward(dln2, c.ln2_hat, c.ln2_rstd, vec(theta, p.ln2_gain, D),
                                              vec(grad, p.ln2_gain, D), vec(grad, p.ln2_bias, D));

    // Attention residual branch.
    block(grad, p.proj_weight, D, D) += c.attn_out.transpose() * dmid;
    vec(grad, p.proj_bias, D) += dmid.colwise().sum();
    const RowMatrix dattn = dmid * block(theta, p.proj_weight, D, D).transpose();
    RowMatrix dqkv(T, 3 * D);
    for (int h = 0; h < heads_; ++h) {
      const auto& a = c.probs[static_cast<std::size_t>(h)];
      const auto q = c.qkv.middleCols(h * dh, dh);
      const auto k = c.qkv.middleCols(D + h * dh, dh);
      const auto v = c.qkv.middleCols(2 * D + h * dh, dh);
      const auto dout = dattn.middleCols(h * dh, dh);
      const RowMatrix da = dout * v.transpose();
      dqkv.middleCols(2 * D + h * dh, dh) = a.transpose() * dout;
      const Eigen::VectorXd row_dot = (da.array() * a.array()).rowwise().sum();
      const RowMatrix ds = a.array() * (da.array().colwise() - row_dot.array());
      dqkv.middleCols(h * dh, dh) = (ds * k) * scale;
      dqkv.middleCols(D + h * dh, dh) = (ds.transpose() * q) * scale;
    }
    block(grad, p.qkv_weight, D, 3 * D) += c.ln1_out.transpose() * dqkv;
    vec(grad, p.qkv_bias, 3 * D) += dqkv.colwise().sum();
    const RowMatrix dln1 = dqkv * block(theta, p.qkv_weight, D, 3 * D).transpose();
    dx = dmid + layer_norm_backward(dln1, c.ln1_hat, c.ln1_rstd, vec(theta, p.ln1_gain, D),
                                    vec(grad, p.ln1_gain, D), vec(grad, p.ln1_bias, D));
  }

  auto dtok = block(grad, layout_.token_embedding, V, D);
  auto dpos = block(grad, layout_.position_embedding, layout_.context, D);
  for (Eigen::Index t = 0; t < T; ++t) {
    dtok.row(cache.tokens[static_cast<std::size_t>(t)]) += dx.row(t);
    dpos.row(t) += dx.row(t);
  }
}

}  // namespace vceval
