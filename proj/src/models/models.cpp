#include "padkit/models.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <sstream>

#include <fmt/format.h>

namespace padkit::models {

std::string arch_name(Architecture arch) {
  switch (arch) {
    case Architecture::LivenessNet: return "LivenessNet";
    case Architecture::AttackNetV1: return "AttackNetV1";
    case Architecture::AttackNetV2_1: return "AttackNetV2_1";
    case Architecture::AttackNetV2_2: return "AttackNetV2_2";
  }
  return "?";
}

std::string arch_flag(Architecture arch) {
  switch (arch) {
    case Architecture::LivenessNet: return "livenessnet";
    case Architecture::AttackNetV1: return "attacknet-v1";
    case Architecture::AttackNetV2_1: return "attacknet-v2.1";
    case Architecture::AttackNetV2_2: return "attacknet-v2.2";
  }
  return "?";
}

Architecture parse_architecture(std::string_view text) {
  std::string lower;
  for (char c : text) lower += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  for (Architecture a : kAllArchitectures) {
    std::string name;
    for (char c : arch_name(a)) name += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (lower == name || lower == arch_flag(a)) return a;
  }
  throw ModelSpecError("unknown architecture '" + std::string(text) + "'");
}

LayerSpec LayerSpec::conv(std::size_t filters, std::size_t kernel) {
  LayerSpec l;
  l.kind = LayerKind::Conv;
  l.filters = filters;
  l.kernel = kernel;
  return l;
}
LayerSpec LayerSpec::batchnorm() {
  LayerSpec l;
  l.kind = LayerKind::BatchNorm;
  return l;
}
LayerSpec LayerSpec::activation_of(ActivationFn fn, double alpha) {
  LayerSpec l;
  l.kind = LayerKind::Activation;
  l.activation = fn;
  l.alpha = alpha;
  return l;
}
LayerSpec LayerSpec::maxpool() {
  LayerSpec l;
  l.kind = LayerKind::MaxPool;
  return l;
}
LayerSpec LayerSpec::dropout(double rate) {
  LayerSpec l;
  l.kind = LayerKind::Dropout;
  l.rate = rate;
  return l;
}
LayerSpec LayerSpec::flatten() { return LayerSpec{}; }
LayerSpec LayerSpec::dense(std::size_t units) {
  LayerSpec l;
  l.kind = LayerKind::Dense;
  l.units = units;
  return l;
}
LayerSpec LayerSpec::merge_with(MergeMode mode, std::size_t source) {
  LayerSpec l;
  l.kind = LayerKind::Merge;
  l.merge = mode;
  l.source = source;
  return l;
}

std::vector<Shape> infer_shapes(const ModelSpec& spec) {
  if (spec.input.height == 0 || spec.input.width == 0 || spec.input.channels == 0) {
    throw ModelSpecError("input shape must be positive");
  }
  std::vector<Shape> shapes;
  shapes.reserve(spec.layers.size());
  Shape cur{spec.input.height, spec.input.width, spec.input.channels};
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const LayerSpec& l = spec.layers[i];
    const std::string where = "layer " + std::to_string(i);
    switch (l.kind) {
      case LayerKind::Conv:
        if (cur.size() != 3) throw ModelSpecError(where + ": conv needs a spatial input, got " + shape_to_string(cur));
        if (l.filters == 0 || l.kernel % 2 == 0) throw ModelSpecError(where + ": conv needs filters > 0 and an odd kernel");
        cur = {cur[0], cur[1], l.filters};
        break;
      case LayerKind::MaxPool:
        if (cur.size() != 3 || cur[0] % 2 != 0 || cur[1] % 2 != 0) {
          throw ModelSpecError(where + ": max-pool needs even spatial dims, got " + shape_to_string(cur));
        }
        cur = {cur[0] / 2, cur[1] / 2, cur[2]};
        break;
      case LayerKind::Flatten:
        cur = {shape_numel(cur)};
        break;
      case LayerKind::Dense:
        if (cur.size() != 1) throw ModelSpecError(where + ": dense needs a flat input, got " + shape_to_string(cur));
        if (l.units == 0) throw ModelSpecError(where + ": dense needs units > 0");
        cur = {l.units};
        break;
      case LayerKind::Dropout:
        if (!(l.rate >= 0.0 && l.rate < 1.0)) throw ModelSpecError(where + ": dropout rate outside [0,1)");
        break;
      case LayerKind::BatchNorm:
      case LayerKind::Activation:
        break;
      case LayerKind::Merge: {
        if (l.source >= i) throw ModelSpecError(where + ": merge must refer to an earlier layer");
        const Shape& other = shapes[l.source];
        if (l.merge == MergeMode::Add) {
          if (other != cur) {
            throw ModelSpecError(where + ": add merge needs equal shapes, got " + shape_to_string(cur) + " and " +
                                 shape_to_string(other));
          }
        } else {
          if (cur.size() != 3 || other.size() != 3 || cur[0] != other[0] || cur[1] != other[1]) {
            throw ModelSpecError(where + ": concat merge needs equal spatial dims, got " + shape_to_string(cur) + " and " +
                                 shape_to_string(other));
          }
          cur = {cur[0], cur[1], cur[2] + other[2]};
        }
        break;
      }
    }
    shapes.push_back(cur);
  }
  if (spec.layers.size() < 2) throw ModelSpecError("model must end in dense(2) + softmax");
  const LayerSpec& last = spec.layers.back();
  const LayerSpec& head = spec.layers[spec.layers.size() - 2];
  if (last.kind != LayerKind::Activation || last.activation != ActivationFn::Softmax || head.kind != LayerKind::Dense ||
      head.units != 2) {
    throw ModelSpecError("model must end in dense(2) + softmax");
  }
  return shapes;
}

ParamCount count_params(const ModelSpec& spec) {
  const auto shapes = infer_shapes(spec);
  ParamCount pc;
  Shape prev{spec.input.height, spec.input.width, spec.input.channels};
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const LayerSpec& l = spec.layers[i];
    switch (l.kind) {
      case LayerKind::Conv:
        pc.trainable += l.kernel * l.kernel * prev[2] * l.filters + l.filters;
        break;
      case LayerKind::Dense:
        pc.trainable += prev[0] * l.units + l.units;
        break;
      case LayerKind::BatchNorm:
        pc.trainable += 2 * prev.back();
        pc.non_trainable += 2 * prev.back();
        break;
      default:
        break;
    }
    prev = shapes[i];
  }
  return pc;
}

std::uint64_t reference_param_count(Architecture arch) {
  switch (arch) {
    case Architecture::LivenessNet: return 8'406'098;
    case Architecture::AttackNetV1:
    case Architecture::AttackNetV2_1: return 33'588'738;
    case Architecture::AttackNetV2_2: return 16'806'722;
  }
  return 0;
}

std::string Topology::label() const {
  std::string s = fmt::format("pools={} widths=", block_widths.size());
  for (std::size_t i = 0; i < block_widths.size(); ++i) s += fmt::format("{}{:03d}", i ? "-" : "", block_widths[i]);
  s += fmt::format(" convs={}", convs_per_block);
  if (!merge_operand.empty()) {
    s += merge_mode == MergeMode::Add ? " add=" : " concat=";
    for (std::size_t i = 0; i < merge_operand.size(); ++i) s += fmt::format("{}c3+c{}", i ? "," : "", merge_operand[i]);
  }
  s += fmt::format(" head={:03d}", head_units);
  return s;
}

namespace {

struct ArchStyle {
  ActivationFn conv_act;
  ActivationFn dense_act;
};

ArchStyle style_for(Architecture arch) {
  switch (arch) {
    case Architecture::LivenessNet:
    case Architecture::AttackNetV1: return {ActivationFn::Relu, ActivationFn::Relu};
    case Architecture::AttackNetV2_1:
    case Architecture::AttackNetV2_2: return {ActivationFn::LeakyRelu, ActivationFn::Tanh};
  }
  return {ActivationFn::Relu, ActivationFn::Relu};
}

}  // namespace

ModelSpec build_from_topology(Architecture arch, const Topology& topology, InputShape input, const Hyperparams& hp) {
  const std::size_t pools = topology.block_widths.size();
  const std::size_t factor = std::size_t{1} << pools;
  if (input.height % factor != 0 || input.width % factor != 0) {
    throw ModelSpecError(fmt::format("input {}x{} not divisible by {} for {} pooling stages", input.height, input.width,
                                     factor, pools));
  }
  if (!topology.merge_operand.empty() && topology.merge_operand.size() != pools) {
    throw ModelSpecError("one merge operand per block required");
  }
  const ArchStyle st = style_for(arch);
  ModelSpec spec;
  spec.arch = arch;
  spec.input = input;
  spec.dropout_conv = hp.dropout_conv;
  spec.dropout_dense = hp.dropout_dense;
  spec.l2 = hp.l2;
  auto& L = spec.layers;
  for (std::size_t b = 0; b < pools; ++b) {
    std::vector<std::size_t> conv_out;  // index of the BN closing each conv unit
    for (std::size_t c = 0; c < topology.convs_per_block; ++c) {
      L.push_back(LayerSpec::conv(topology.block_widths[b]));
      L.push_back(LayerSpec::activation_of(st.conv_act));
      L.push_back(LayerSpec::batchnorm());
      conv_out.push_back(L.size() - 1);
    }
    if (!topology.merge_operand.empty()) {
      const std::size_t op = topology.merge_operand[b];
      if (op < 1 || op >= topology.convs_per_block) throw ModelSpecError("merge operand must name an earlier conv in the block");
      L.push_back(LayerSpec::merge_with(topology.merge_mode, conv_out[op - 1]));
    }
    L.push_back(LayerSpec::maxpool());
    L.push_back(LayerSpec::dropout(hp.dropout_conv));
  }
  L.push_back(LayerSpec::flatten());
  L.push_back(LayerSpec::dense(topology.head_units));
  L.push_back(LayerSpec::activation_of(st.dense_act));
  L.push_back(LayerSpec::batchnorm());
  L.push_back(LayerSpec::dropout(hp.dropout_dense));
  L.push_back(LayerSpec::dense(2));
  L.push_back(LayerSpec::activation_of(ActivationFn::Softmax));
  infer_shapes(spec);
  return spec;
}

ModelSpec build_livenessnet(InputShape input, double dropout_conv, double dropout_dense, double l2) {
  if (input.height % 4 != 0 || input.width % 4 != 0) {
    throw ModelSpecError(fmt::format("LivenessNet input {}x{} must be divisible by 4", input.height, input.width));
  }
  Topology t;
  t.block_widths = {16, 32};
  t.convs_per_block = 2;
  t.head_units = 64;
  return build_from_topology(Architecture::LivenessNet, t, input, {dropout_conv, dropout_dense, l2});
}

std::string ReconstructionReport::deviation() const {
  if (exact()) return {};
  const auto& c = chosen_candidate();
  return fmt::format("{}: no grid candidate reaches {} parameters; closest is '{}' with {} ({:+d})", arch_name(arch), target,
                     c.topology.label(), c.params, c.delta);
}

ReconstructionReport reconstruct_to_count(Architecture arch, std::uint64_t target, InputShape reference_input) {
  if (target == 0) throw ModelSpecError("reconstruction target must be positive");
  ReconstructionReport rep;
  rep.arch = arch;
  rep.target = target;
  rep.reference_input = reference_input;

  const bool attack = arch != Architecture::LivenessNet;
  const MergeMode mode = arch == Architecture::AttackNetV2_2 ? MergeMode::Add : MergeMode::Concat;
  const std::size_t widths[] = {16, 32, 64};
  const std::size_t heads[] = {64, 128};

  for (std::size_t pools = 2; pools <= 3; ++pools) {
    std::vector<std::size_t> wi(pools, 0);
    while (true) {
      bool nondecreasing = true;
      for (std::size_t b = 1; b < pools; ++b) nondecreasing = nondecreasing && wi[b] >= wi[b - 1];
      if (nondecreasing) {
        const std::size_t n_ops = attack ? (std::size_t{1} << pools) : 1;
        for (std::size_t mask = 0; mask < n_ops; ++mask) {
          for (std::size_t head : heads) {
            Topology t;
            for (std::size_t b = 0; b < pools; ++b) t.block_widths.push_back(widths[wi[b]]);
            t.convs_per_block = attack ? 3 : 2;
            if (attack) {
              for (std::size_t b = 0; b < pools; ++b) t.merge_operand.push_back(((mask >> (pools - 1 - b)) & 1) ? 2 : 1);
              t.merge_mode = mode;
            }
            t.head_units = head;
            ModelSpec spec;
            try {
              spec = build_from_topology(arch, t, reference_input, {});
            } catch (const ModelSpecError&) {
              continue;
            }
            ReconstructionCandidate c;
            c.topology = t;
            c.params = count_params(spec).total();
            c.delta = static_cast<std::int64_t>(c.params) - static_cast<std::int64_t>(target);
            c.layer_count = spec.layers.size();
            rep.candidates.push_back(std::move(c));
          }
        }
      }
      std::size_t b = pools;
      while (b > 0 && ++wi[b - 1] == 3) wi[--b] = 0;
      if (b == 0) break;
    }
  }
  if (rep.candidates.empty()) throw ModelSpecError("reconstruction grid is empty for this input shape");

  for (std::size_t i = 0; i < rep.candidates.size(); ++i)
    if (rep.candidates[i].delta == 0) rep.exact_matches.push_back(i);

  auto better = [&](std::size_t a, std::size_t b) {
    const auto& ca = rep.candidates[a];
    const auto& cb = rep.candidates[b];
    const auto da = std::llabs(ca.delta), db = std::llabs(cb.delta);
    if (da != db) return da < db;
    if (ca.layer_count != cb.layer_count) return ca.layer_count < cb.layer_count;
    return ca.topology.label() < cb.topology.label();
  };
  rep.chosen = 0;
  for (std::size_t i = 1; i < rep.candidates.size(); ++i)
    if (better(i, rep.chosen)) rep.chosen = i;
  return rep;
}

ModelSpec build_attacknet(Architecture variant, InputShape input, const Hyperparams& hp, std::string* deviation) {
  if (variant == Architecture::LivenessNet) throw ModelSpecError("build_attacknet needs an AttackNet variant");
  const auto rep = reconstruct_to_count(variant, reference_param_count(variant));
  if (deviation) *deviation = rep.deviation();
  return build_from_topology(variant, rep.chosen_candidate().topology, input, hp);
}

ModelSpec build_model(Architecture arch, InputShape input, const Hyperparams& hp) {
  if (arch == Architecture::LivenessNet) return build_livenessnet(input, hp.dropout_conv, hp.dropout_dense, hp.l2);
  return build_attacknet(arch, input, hp);
}

namespace {

std::string kind_name(LayerKind k) {
  switch (k) {
    case LayerKind::Conv: return "conv";
    case LayerKind::BatchNorm: return "batchnorm";
    case LayerKind::Activation: return "activation";
    case LayerKind::MaxPool: return "maxpool";
    case LayerKind::Dropout: return "dropout";
    case LayerKind::Flatten: return "flatten";
    case LayerKind::Dense: return "dense";
    case LayerKind::Merge: return "merge";
  }
  return "?";
}

std::string act_name(ActivationFn a) {
  switch (a) {
    case ActivationFn::Relu: return "relu";
    case ActivationFn::LeakyRelu: return "leaky_relu";
    case ActivationFn::Tanh: return "tanh";
    case ActivationFn::Softmax: return "softmax";
  }
  return "?";
}

double parse_double(const std::string& s, const std::string& ctx) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0') throw ModelSpecError(ctx + ": bad number '" + s + "'");
  return v;
}

std::size_t parse_size(const std::string& s, const std::string& ctx) {
  char* end = nullptr;
  const unsigned long long v = std::strtoull(s.c_str(), &end, 10);
  if (end == s.c_str() || *end != '\0') throw ModelSpecError(ctx + ": bad integer '" + s + "'");
  return static_cast<std::size_t>(v);
}

}  // namespace

std::string to_text(const ModelSpec& spec) {
  std::string out = "padkit-model 1\n";
  out += fmt::format("arch {}\n", arch_flag(spec.arch));
  out += fmt::format("input {} {} {}\n", spec.input.height, spec.input.width, spec.input.channels);
  out += fmt::format("dropout {} {}\n", spec.dropout_conv, spec.dropout_dense);
  out += fmt::format("l2 {}\n", spec.l2);
  for (const auto& l : spec.layers) {
    out += "layer " + kind_name(l.kind);
    switch (l.kind) {
      case LayerKind::Conv: out += fmt::format(" filters={} kernel={}", l.filters, l.kernel); break;
      case LayerKind::Dense: out += fmt::format(" units={}", l.units); break;
      case LayerKind::Dropout: out += fmt::format(" rate={}", l.rate); break;
      case LayerKind::Activation:
        out += " fn=" + act_name(l.activation);
        if (l.activation == ActivationFn::LeakyRelu) out += fmt::format(" alpha={}", l.alpha);
        break;
      case LayerKind::Merge:
        out += fmt::format(" mode={} source={}", l.merge == MergeMode::Add ? "add" : "concat", l.source);
        break;
      default: break;
    }
    out += "\n";
  }
  out += "end\n";
  return out;
}

ModelSpec parse_model_spec(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line) || line != "padkit-model 1") throw ModelSpecError("missing 'padkit-model 1' header");
  ModelSpec spec;
  bool ended = false;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string ctx = "line " + std::to_string(lineno);
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    if (key.empty() || key[0] == '#') continue;
    if (key == "end") {
      ended = true;
      break;
    }
    if (key == "arch") {
      std::string v;
      ls >> v;
      spec.arch = parse_architecture(v);
    } else if (key == "input") {
      ls >> spec.input.height >> spec.input.width >> spec.input.channels;
    } else if (key == "dropout") {
      ls >> spec.dropout_conv >> spec.dropout_dense;
    } else if (key == "l2") {
      ls >> spec.l2;
    } else if (key == "layer") {
      std::string kind;
      ls >> kind;
      LayerSpec l;
      if (kind == "conv") l.kind = LayerKind::Conv;
      else if (kind == "batchnorm") l.kind = LayerKind::BatchNorm;
      else if (kind == "activation") l.kind = LayerKind::Activation;
      else if (kind == "maxpool") l.kind = LayerKind::MaxPool;
      else if (kind == "dropout") l.kind = LayerKind::Dropout;
      else if (kind == "flatten") l.kind = LayerKind::Flatten;
      else if (kind == "dense") l.kind = LayerKind::Dense;
      else if (kind == "merge") l.kind = LayerKind::Merge;
      else throw ModelSpecError(ctx + ": unknown layer kind '" + kind + "'");
      std::string kv;
      while (ls >> kv) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw ModelSpecError(ctx + ": expected key=value, got '" + kv + "'");
        const std::string k = kv.substr(0, eq), v = kv.substr(eq + 1);
        if (k == "filters") l.filters = parse_size(v, ctx);
        else if (k == "kernel") l.kernel = parse_size(v, ctx);
        else if (k == "units") l.units = parse_size(v, ctx);
        else if (k == "rate") l.rate = parse_double(v, ctx);
        else if (k == "alpha") l.alpha = parse_double(v, ctx);
        else if (k == "source") l.source = parse_size(v, ctx);
        else if (k == "mode") {
          if (v == "add") l.merge = MergeMode::Add;
          else if (v == "concat") l.merge = MergeMode::Concat;
          else throw ModelSpecError(ctx + ": unknown merge mode '" + v + "'");
        } else if (k == "fn") {
          if (v == "relu") l.activation = ActivationFn::Relu;
          else if (v == "leaky_relu") l.activation = ActivationFn::LeakyRelu;
          else if (v == "tanh") l.activation = ActivationFn::Tanh;
          else if (v == "softmax") l.activation = ActivationFn::Softmax;
          else throw ModelSpecError(ctx + ": unknown activation '" + v + "'");
        } else {
          throw ModelSpecError(ctx + ": unknown attribute '" + k + "'");
        }
      }
      spec.layers.push_back(l);
    } else {
      throw ModelSpecError(ctx + ": unknown directive '" + key + "'");
    }
  }
  if (!ended) throw ModelSpecError("missing 'end'");
  infer_shapes(spec);
  return spec;
}

std::string reconstruction_markdown(const ReconstructionReport& report) {
  std::string out = fmt::format("### {} (target {} parameters at {}x{}x{})\n\n", arch_name(report.arch), report.target,
                                report.reference_input.height, report.reference_input.width, report.reference_input.channels);
  out += report.exact() ? fmt::format("Exact matches: {}. ", report.exact_matches.size()) : std::string("No exact match. ");
  out += fmt::format("Chosen: `{}` ({} parameters, delta {:+d}).\n\n", report.chosen_candidate().topology.label(),
                     report.chosen_candidate().params, report.chosen_candidate().delta);
  out += "| candidate | layers | parameters | delta | |\n|---|---|---|---|---|\n";
  for (std::size_t i = 0; i < report.candidates.size(); ++i) {
    const auto& c = report.candidates[i];
    std::string mark;
    if (i == report.chosen) mark = "chosen";
    else if (c.delta == 0) mark = "exact";
    out += fmt::format("| `{}` | {} | {} | {:+d} | {} |\n", c.topology.label(), c.layer_count, c.params, c.delta, mark);
  }
  return out;
}

}  // namespace padkit::models
