#include "ctxseq/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "json.hpp"

#include "ctxseq/errors.hpp"

namespace ctxseq {

namespace {

using nlohmann::json;

void write_u32(std::ostream& out, std::uint32_t v) {
    char bytes[4];
    for (int i = 0; i < 4; ++i) bytes[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    out.write(bytes, 4);
}

void write_u64(std::ostream& out, std::uint64_t v) {
    char bytes[8];
    for (int i = 0; i < 8; ++i) bytes[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    out.write(bytes, 8);
}

std::uint32_t read_u32(std::istream& in, const char* what) {
    unsigned char bytes[4];
    if (!in.read(reinterpret_cast<char*>(bytes), 4)) {
        throw DataError(std::string("checkpoint truncated while reading ") + what);
    }
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | bytes[i];
    return v;
}

std::uint64_t read_u64(std::istream& in, const char* what) {
    unsigned char bytes[8];
    if (!in.read(reinterpret_cast<char*>(bytes), 8)) {
        throw DataError(std::string("checkpoint truncated while reading ") + what);
    }
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | bytes[i];
    return v;
}

void write_f64_array(std::ostream& out, const std::vector<double>& values) {
    for (double d : values) {
        const std::uint64_t bits = std::bit_cast<std::uint64_t>(d);
        write_u64(out, bits);
    }
}

json config_to_json(const ModelConfig& cfg) {
    return json{{"mode", to_string(cfg.mode)},
                {"src_vocab", cfg.src_vocab},
                {"tgt_vocab", cfg.tgt_vocab},
                {"embed_dim", cfg.embed_dim},
                {"hidden_dim", cfg.hidden_dim},
                {"max_decode_len", cfg.max_decode_len}};
}

ModelConfig config_from_json(const json& j) {
    ModelConfig cfg;
    cfg.mode = model_mode_from_string(j.at("mode").get<std::string>());
    cfg.src_vocab = j.at("src_vocab").get<std::size_t>();
    cfg.tgt_vocab = j.at("tgt_vocab").get<std::size_t>();
    cfg.embed_dim = j.at("embed_dim").get<std::size_t>();
    cfg.hidden_dim = j.at("hidden_dim").get<std::size_t>();
    cfg.max_decode_len = j.at("max_decode_len").get<std::size_t>();
    return cfg;
}

}  // namespace

Checkpoint make_checkpoint(const Seq2SeqModel& model, std::size_t epoch,
                           const std::string& src_vocab_hash, const std::string& tgt_vocab_hash,
                           const OptimizerDescriptor& optimizer) {
    Checkpoint ckpt;
    ckpt.config = model.config();
    ckpt.epoch = epoch;
    ckpt.src_vocab_hash = src_vocab_hash;
    ckpt.tgt_vocab_hash = tgt_vocab_hash;
    ckpt.optimizer = optimizer;
    for (const Parameter* p : model.parameters()) ckpt.params.emplace_back(p->name, p->value);
    return ckpt;
}

OptimizerDescriptor describe_optimizer(const Optimizer& optimizer) {
    const OptimizerConfig& cfg = optimizer.config();
    OptimizerDescriptor d;
    d.kind = to_string(cfg.kind);
    d.lr = cfg.lr;
    d.beta1 = cfg.beta1;
    d.beta2 = cfg.beta2;
    d.eps = cfg.eps;
    d.steps = optimizer.step_count();
    return d;
}

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
    json manifest;
    manifest["model"] = config_to_json(ckpt.config);
    manifest["epoch"] = ckpt.epoch;
    manifest["src_vocab_hash"] = ckpt.src_vocab_hash;
    manifest["tgt_vocab_hash"] = ckpt.tgt_vocab_hash;
    manifest["optimizer"] = json{{"kind", ckpt.optimizer.kind},   {"lr", ckpt.optimizer.lr},
                                 {"beta1", ckpt.optimizer.beta1}, {"beta2", ckpt.optimizer.beta2},
                                 {"eps", ckpt.optimizer.eps},     {"steps", ckpt.optimizer.steps}};
    json params = json::array();
    for (const auto& [name, tensor] : ckpt.params) {
        params.push_back(json{{"name", name}, {"shape", tensor.shape}});
    }
    manifest["params"] = params;
    const std::string text = manifest.dump();

    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write checkpoint " + path);
    out.write(kCheckpointMagic, 6);
    write_u32(out, kCheckpointVersion);
    write_u64(out, text.size());
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    for (const auto& [name, tensor] : ckpt.params) write_f64_array(out, tensor.data);
    if (!out) throw DataError("write failed for checkpoint " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot read checkpoint " + path);

    char magic[6];
    if (!in.read(magic, 6) || std::memcmp(magic, kCheckpointMagic, 6) != 0) {
        throw DataError("checkpoint " + path + ": bad magic, not a CTXSEQ file");
    }
    const std::uint32_t version = read_u32(in, "version");
    if (version != kCheckpointVersion) {
        throw DataError("checkpoint " + path + ": unsupported format version " +
                        std::to_string(version));
    }
    const std::uint64_t manifest_len = read_u64(in, "manifest length");
    std::string text(manifest_len, '\0');
    if (!in.read(text.data(), static_cast<std::streamsize>(manifest_len))) {
        throw DataError("checkpoint " + path + ": truncated manifest");
    }

    json manifest;
    try {
        manifest = json::parse(text);
    } catch (const json::exception& e) {
        throw DataError("checkpoint " + path + ": manifest is not valid JSON (" + e.what() + ")");
    }

    Checkpoint ckpt;
    try {
        ckpt.config = config_from_json(manifest.at("model"));
        ckpt.epoch = manifest.at("epoch").get<std::size_t>();
        ckpt.src_vocab_hash = manifest.at("src_vocab_hash").get<std::string>();
        ckpt.tgt_vocab_hash = manifest.at("tgt_vocab_hash").get<std::string>();
        const json& opt = manifest.at("optimizer");
        ckpt.optimizer.kind = opt.at("kind").get<std::string>();
        ckpt.optimizer.lr = opt.at("lr").get<double>();
        ckpt.optimizer.beta1 = opt.at("beta1").get<double>();
        ckpt.optimizer.beta2 = opt.at("beta2").get<double>();
        ckpt.optimizer.eps = opt.at("eps").get<double>();
        ckpt.optimizer.steps = opt.at("steps").get<std::size_t>();
        for (const json& p : manifest.at("params")) {
            const std::string name = p.at("name").get<std::string>();
            const std::vector<std::size_t> shape = p.at("shape").get<std::vector<std::size_t>>();
            ckpt.params.emplace_back(name, Tensor::zeros(shape));
        }
    } catch (const json::exception& e) {
        throw DataError("checkpoint " + path + ": manifest field missing or mistyped (" +
                        e.what() + ")");
    }

    for (auto& [name, tensor] : ckpt.params) {
        for (std::size_t i = 0; i < tensor.size(); ++i) {
            const std::uint64_t bits = read_u64(in, ("parameter '" + name + "'").c_str());
            tensor[i] = std::bit_cast<double>(bits);
        }
    }
    if (in.peek() != std::char_traits<char>::eof()) {
        throw DataError("checkpoint " + path + ": trailing bytes after parameter data");
    }
    return ckpt;
}

void apply_checkpoint(Seq2SeqModel& model, const Checkpoint& ckpt) {
    const ModelConfig& have = model.config();
    const ModelConfig& want = ckpt.config;
    auto mismatch = [](const std::string& field, const std::string& a, const std::string& b) {
        return ConfigError("checkpoint mismatch: " + field + " is " + a + ", model has " + b);
    };
    if (want.mode != have.mode) {
        throw mismatch("mode", to_string(want.mode), to_string(have.mode));
    }
    if (want.src_vocab != have.src_vocab) {
        throw mismatch("src_vocab", std::to_string(want.src_vocab),
                       std::to_string(have.src_vocab));
    }
    if (want.tgt_vocab != have.tgt_vocab) {
        throw mismatch("tgt_vocab", std::to_string(want.tgt_vocab),
                       std::to_string(have.tgt_vocab));
    }
    if (want.embed_dim != have.embed_dim) {
        throw mismatch("embed_dim", std::to_string(want.embed_dim),
                       std::to_string(have.embed_dim));
    }
    if (want.hidden_dim != have.hidden_dim) {
        throw mismatch("hidden_dim", std::to_string(want.hidden_dim),
                       std::to_string(have.hidden_dim));
    }

    const auto& model_params = model.parameters();
    if (model_params.size() != ckpt.params.size()) {
        throw ConfigError("checkpoint mismatch: parameter count " +
                          std::to_string(ckpt.params.size()) + " vs model " +
                          std::to_string(model_params.size()));
    }
    for (std::size_t i = 0; i < model_params.size(); ++i) {
        Parameter* p = model_params[i];
        const auto& [name, tensor] = ckpt.params[i];
        if (p->name != name) {
            throw ConfigError("checkpoint mismatch: parameter '" + name + "' where model expects '" +
                              p->name + "'");
        }
        if (p->value.shape != tensor.shape) {
            throw ConfigError("checkpoint mismatch: parameter '" + name + "' has shape " +
                              tensor.shape_str() + ", model expects " + p->value.shape_str());
        }
        p->value = tensor;
        p->zero_grad();
    }
}

Seq2SeqModel model_from_checkpoint(const Checkpoint& ckpt) {
    Seq2SeqModel model(ckpt.config);
    apply_checkpoint(model, ckpt);
    return model;
}

}  // namespace ctxseq
