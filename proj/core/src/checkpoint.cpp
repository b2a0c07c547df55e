#include "netdeconf/checkpoint.hpp"

#include <cmath>
#include <string>
#include <vector>

#include "netdeconf/dataset_io.hpp"
#include "netdeconf/errors.hpp"
#include "netdeconf/text_format.hpp"

namespace netdeconf {

namespace {

constexpr std::string_view kMagic = "netdeconf-checkpoint";
constexpr int kVersion = 1;

struct LineReader {
  std::string_view text;
  std::size_t pos = 0;
  std::size_t line = 0;

  bool next(std::string_view& out) {
    if (pos >= text.size()) return false;
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    out = text.substr(pos, end - pos);
    pos = end + 1;
    ++line;
    return true;
  }

  std::string_view expect(const char* what) {
    std::string_view l;
    if (!next(l)) throw CheckpointError(std::string("checkpoint truncated: expected ") + what);
    return l;
  }
};

std::uint64_t keyed_u64(LineReader& r, std::string_view key) {
  const auto l = r.expect(std::string(key).c_str());
  const auto f = split_fields(l, '\t');
  if (f.size() != 2 || f[0] != key)
    throw CheckpointError("checkpoint line " + std::to_string(r.line) + ": expected '" + std::string(key) + "'");
  try {
    return parse_u64(f[1], "checkpoint " + std::string(key));
  } catch (const FormatError& e) {
    throw CheckpointError(e.what());
  }
}

}  // namespace

std::string serialize_checkpoint(const Checkpoint& ckpt) {
  if (ckpt.params.architecture() != ckpt.arch)
    throw CheckpointError("checkpoint parameters do not match the declared architecture");
  const auto flat = ckpt.params.flatten();
  std::string s;
  s.reserve(flat.size() * 24 + 256);
  s += std::string(kMagic) + "\t" + std::to_string(kVersion) + "\n";
  s += "features\t" + std::to_string(ckpt.arch.features) + "\n";
  s += "gcn_layers\t" + std::to_string(ckpt.arch.gcn_layers) + "\n";
  s += "out_layers\t" + std::to_string(ckpt.arch.out_layers) + "\n";
  s += "rep_dim\t" + std::to_string(ckpt.arch.rep_dim) + "\n";
  s += "hidden_units\t" + std::to_string(ckpt.arch.hidden_units) + "\n";
  s += "identity_adjacency\t" + std::to_string(ckpt.identity_adjacency ? 1 : 0) + "\n";
  s += "seed\t" + std::to_string(ckpt.seed) + "\n";
  s += "parameters\t" + std::to_string(flat.size()) + "\n";
  for (double v : flat) {
    s += format_double(v);
    s += '\n';
  }
  return s;
}

Checkpoint deserialize_checkpoint(std::string_view text) {
  LineReader r{text};
  {
    const auto f = split_fields(r.expect("header"), '\t');
    if (f.size() != 2 || f[0] != kMagic) throw CheckpointError("not a netdeconf checkpoint");
    if (f[1] != std::to_string(kVersion))
      throw CheckpointError("unsupported checkpoint version '" + std::string(f[1]) + "'");
  }
  Checkpoint c;
  c.arch.features = keyed_u64(r, "features");
  c.arch.gcn_layers = keyed_u64(r, "gcn_layers");
  c.arch.out_layers = keyed_u64(r, "out_layers");
  c.arch.rep_dim = keyed_u64(r, "rep_dim");
  c.arch.hidden_units = keyed_u64(r, "hidden_units");
  const auto ident = keyed_u64(r, "identity_adjacency");
  if (ident > 1) throw CheckpointError("checkpoint identity_adjacency must be 0 or 1");
  c.identity_adjacency = ident == 1;
  c.seed = keyed_u64(r, "seed");
  const auto count = keyed_u64(r, "parameters");
  if (c.arch.features == 0 || c.arch.gcn_layers == 0 || c.arch.out_layers == 0 || c.arch.rep_dim == 0 ||
      c.arch.hidden_units == 0)
    throw CheckpointError("checkpoint architecture has a zero dimension");

  c.params = ModelParams::zeros(c.arch);
  if (c.params.parameter_count() != count)
    throw CheckpointError("checkpoint declares " + std::to_string(count) + " parameters, architecture needs " +
                          std::to_string(c.params.parameter_count()));
  std::vector<double> flat;
  flat.reserve(count);
  std::string_view l;
  while (r.next(l)) {
    if (l.empty() && r.pos >= text.size()) break;
    if (flat.size() == count) throw CheckpointError("checkpoint has trailing data");
    double v;
    try {
      v = parse_double(l, "checkpoint line " + std::to_string(r.line));
    } catch (const FormatError& e) {
      throw CheckpointError(e.what());
    }
    if (!std::isfinite(v)) throw CheckpointError("checkpoint line " + std::to_string(r.line) + ": non-finite value");
    flat.push_back(v);
  }
  if (flat.size() != count)
    throw CheckpointError("checkpoint truncated: " + std::to_string(flat.size()) + " of " + std::to_string(count) +
                          " parameters");
  c.params.assign_flat(flat);
  return c;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  write_text_file(path, serialize_checkpoint(ckpt));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  if (!std::filesystem::is_regular_file(path)) throw MissingFileError("missing checkpoint file: " + path.string());
  return deserialize_checkpoint(read_text_file(path));
}

}  // namespace netdeconf
