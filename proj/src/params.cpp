#include "seed/params.hpp"

#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "seed/error.hpp"
#include "seed/tensor_io.hpp"

namespace seed {

using nlohmann::json;

void ModelShape::validate() const {
  if (channels < 4 || channels % 2 != 0) {
    throw validation_error("ModelShape: channels must be even and >= 4");
  }
  if (heads < 1 || channels % heads != 0) {
    throw validation_error("ModelShape: channels must divide evenly into heads");
  }
  if (grid_side < 1) throw validation_error("ModelShape: grid_side must be >= 1");
  if (num_layers < 1) throw validation_error("ModelShape: num_layers must be >= 1");
}

PipelineParams seeded_params(const ModelShape& shape, std::uint64_t seed) {
  shape.validate();
  const int c = shape.channels;
  PipelineParams p;
  p.mask.mlp = Mlp2::seeded(c, shape.mask_width(), 1, seed, "mask");
  p.dqs_layer = DecoderLayerParams::seeded(c, shape.grid_side, shape.heads, shape.ffn_width(),
                                           seed, "dqs_layer");
  p.query_embed = Mlp2::seeded(9, shape.embed_width(), c, seed, "embed");
  p.decoder_layers.reserve(shape.num_layers);
  for (int l = 0; l < shape.num_layers; ++l) {
    p.decoder_layers.push_back(DecoderLayerParams::seeded(
        c, shape.grid_side, shape.heads, shape.ffn_width(), seed,
        "decoder." + std::to_string(l)));
  }
  return p;
}

namespace {

struct NamedTensorVisitor {
  std::function<void(const std::string&, std::vector<double>&, std::vector<std::uint32_t>)>
      visit;

  void linear(const std::string& name, Linear& l) {
    visit(name + ".weight", l.weight,
          {static_cast<std::uint32_t>(l.out), static_cast<std::uint32_t>(l.in)});
    visit(name + ".bias", l.bias, {static_cast<std::uint32_t>(l.out)});
  }
  void mlp(const std::string& name, Mlp2& m) {
    linear(name + ".l1", m.l1);
    linear(name + ".l2", m.l2);
  }
  void norm(const std::string& name, LayerNorm& n) {
    visit(name + ".gain", n.gain, {static_cast<std::uint32_t>(n.dim)});
    visit(name + ".bias", n.bias, {static_cast<std::uint32_t>(n.dim)});
  }
  void layer(const std::string& name, DecoderLayerParams& p) {
    linear(name + ".sa.q", p.self_attn.q_proj);
    linear(name + ".sa.k", p.self_attn.k_proj);
    linear(name + ".sa.v", p.self_attn.v_proj);
    linear(name + ".sa.out", p.self_attn.out_proj);
    linear(name + ".dga.offset", p.dga.offset_proj);
    linear(name + ".dga.weight", p.dga.weight_proj);
    linear(name + ".dga.value", p.dga.value_proj);
    linear(name + ".dga.output", p.dga.output_proj);
    mlp(name + ".ffn", p.ffn);
    norm(name + ".norm_attn", p.norm_attn);
    norm(name + ".norm_dga", p.norm_dga);
    norm(name + ".norm_ffn", p.norm_ffn);
    mlp(name + ".heads.cls", p.heads.cls_head);
    mlp(name + ".heads.loc", p.heads.loc_head);
    mlp(name + ".heads.box", p.heads.box_head);
  }
  void all(PipelineParams& p) {
    mlp("mask", p.mask.mlp);
    layer("dqs_layer", p.dqs_layer);
    mlp("embed", p.query_embed);
    for (std::size_t l = 0; l < p.decoder_layers.size(); ++l) {
      layer("decoder." + std::to_string(l), p.decoder_layers[l]);
    }
  }
};

std::string file_for(const std::string& tensor_name) {
  std::string f = tensor_name;
  for (char& ch : f) {
    if (ch == '.') ch = '_';
  }
  return f + ".bevt";
}

}  // namespace

void save_params(const PipelineParams& params, const ModelShape& shape,
                 const std::string& dir) {
  shape.validate();
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw io_error(tensor_io_code::write_failed, "cannot create params dir " + dir);

  json manifest;
  manifest["tensors"] = json::object();
  PipelineParams copy = params;
  NamedTensorVisitor visitor;
  visitor.visit = [&](const std::string& name, std::vector<double>& data,
                      std::vector<std::uint32_t> dims) {
    const std::string file = file_for(name);
    write_tensor_f64(dir + "/" + file, dims, data);
    manifest["tensors"][name] = {{"file", file}, {"dims", dims}};
  };
  visitor.all(copy);

  std::ofstream os(dir + "/manifest.json", std::ios::trunc);
  if (!os) throw io_error(tensor_io_code::write_failed, "cannot write manifest in " + dir);
  os << manifest.dump(2) << "\n";
}

PipelineParams load_params(const ModelShape& shape, const std::string& manifest_path) {
  shape.validate();
  std::ifstream is(manifest_path);
  if (!is) throw io_error(tensor_io_code::open_failed, "cannot open manifest " + manifest_path);
  json manifest;
  try {
    is >> manifest;
  } catch (const json::exception& e) {
    throw validation_error(std::string("manifest: invalid JSON: ") + e.what());
  }
  if (!manifest.contains("tensors") || !manifest["tensors"].is_object()) {
    throw validation_error("manifest: missing /tensors object");
  }
  const std::string dir = std::filesystem::path(manifest_path).parent_path().string();

  // Start from a shape-consistent skeleton, then overwrite every tensor.
  PipelineParams params = seeded_params(shape, 0);
  NamedTensorVisitor visitor;
  visitor.visit = [&](const std::string& name, std::vector<double>& data,
                      std::vector<std::uint32_t> dims) {
    if (!manifest["tensors"].contains(name)) {
      throw validation_error("manifest: missing tensor " + name);
    }
    const json& entry = manifest["tensors"][name];
    const std::string file = entry.at("file").get<std::string>();
    auto [fdims, fdata] = read_tensor_f64(dir.empty() ? file : dir + "/" + file);
    if (fdims != dims) {
      throw validation_error("manifest: tensor " + name + " has unexpected shape");
    }
    data = std::move(fdata);
  };
  visitor.all(params);
  return params;
}

}  // namespace seed
