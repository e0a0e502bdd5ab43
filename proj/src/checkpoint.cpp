#include <tiedlm/checkpoint.hpp>
#include <tiedlm/errors.hpp>

#include <bit>
#include <charconv>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

namespace tiedlm {

namespace {

constexpr std::string_view kMagic = "TIEDLM1\n";

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::map<std::string, std::string> read_header(std::istream &in) {
    std::map<std::string, std::string> kv;
    std::string line;
    while (true) {
        if (!std::getline(in, line)) {
            throw FormatError("checkpoint: truncated header");
        }
        if (line.empty()) {
            break;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw FormatError("checkpoint: malformed header line '" + line + "'");
        }
        kv[line.substr(0, eq)] = line.substr(eq + 1);
    }
    return kv;
}

template <typename T>
T parse_number(const std::map<std::string, std::string> &kv, const std::string &key) {
    const auto it = kv.find(key);
    if (it == kv.end()) {
        throw FormatError("checkpoint: missing header key '" + key + "'");
    }
    if constexpr (std::is_same_v<T, double>) {
        try {
            std::size_t pos = 0;
            const double v = std::stod(it->second, &pos);
            if (pos != it->second.size()) {
                throw FormatError("");
            }
            return v;
        } catch (...) {
            throw FormatError("checkpoint: bad value for '" + key + "'");
        }
    } else {
        T v{};
        const auto &s = it->second;
        const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc{} || p != s.data() + s.size()) {
            throw FormatError("checkpoint: bad value for '" + key + "'");
        }
        return v;
    }
}

bool parse_bool(const std::map<std::string, std::string> &kv, const std::string &key) {
    const auto it = kv.find(key);
    if (it == kv.end()) {
        throw FormatError("checkpoint: missing header key '" + key + "'");
    }
    if (it->second == "true") {
        return true;
    }
    if (it->second == "false") {
        return false;
    }
    throw FormatError("checkpoint: bad boolean for '" + key + "'");
}

} // namespace

void write_checkpoint(std::ostream &out, const ModelParams &params) {
    const ModelConfig &c = params.config;
    out << kMagic;
    out << "vocab_size=" << c.vocab_size << '\n';
    out << "embed_dim=" << c.embed_dim << '\n';
    out << "hidden_dim=" << c.hidden_dim << '\n';
    out << "num_layers=" << c.num_layers << '\n';
    out << "tie_weights=" << (c.tie_weights ? "true" : "false") << '\n';
    out << "dropout_p=" << format_double(c.dropout_p) << '\n';
    out << "unit_norm_embeddings=" << (c.unit_norm_embeddings ? "true" : "false") << '\n';
    out << "seed=" << c.seed << '\n';
    out << '\n';
    const auto tensors = params.tensors();
    out << tensors.size() << '\n';
    for (const auto &t : tensors) {
        out << t.name << ' ' << t.tensor->rows() << ' ' << t.tensor->cols() << '\n';
        out.write(reinterpret_cast<const char *>(t.tensor->data()),
                  static_cast<std::streamsize>(t.tensor->size() * sizeof(double)));
    }
    if (!out) {
        throw FormatError("checkpoint: write failed");
    }
}

ModelParams read_checkpoint(std::istream &in) {
    char magic[8];
    if (!in.read(magic, sizeof magic) || std::string_view(magic, 8) != kMagic) {
        throw FormatError("checkpoint: bad magic (not a TIEDLM1 checkpoint)");
    }
    const auto kv = read_header(in);
    ModelConfig c;
    c.vocab_size = parse_number<std::size_t>(kv, "vocab_size");
    c.embed_dim = parse_number<std::size_t>(kv, "embed_dim");
    c.hidden_dim = parse_number<std::size_t>(kv, "hidden_dim");
    c.num_layers = parse_number<std::size_t>(kv, "num_layers");
    c.tie_weights = parse_bool(kv, "tie_weights");
    c.dropout_p = parse_number<double>(kv, "dropout_p");
    c.unit_norm_embeddings = parse_bool(kv, "unit_norm_embeddings");
    c.seed = parse_number<std::uint64_t>(kv, "seed");
    try {
        c.validate();
    } catch (const ContractViolation &e) {
        throw FormatError(std::string("checkpoint: invalid config: ") + e.what());
    }

    ModelParams p = allocate_params(c);
    auto tensors = p.tensors();
    std::string line;
    if (!std::getline(in, line)) {
        throw FormatError("checkpoint: missing tensor count");
    }
    if (line != std::to_string(tensors.size())) {
        throw FormatError("checkpoint: tensor count " + line + " does not match config (" +
                          std::to_string(tensors.size()) + ")");
    }
    for (auto &t : tensors) {
        if (!std::getline(in, line)) {
            throw FormatError("checkpoint: truncated before tensor " + t.name);
        }
        std::istringstream hs(line);
        std::string name;
        std::size_t rows = 0, cols = 0;
        if (!(hs >> name >> rows >> cols) || name != t.name || rows != t.tensor->rows() ||
            cols != t.tensor->cols()) {
            throw FormatError("checkpoint: expected tensor '" + t.name + " " +
                              std::to_string(t.tensor->rows()) + " " +
                              std::to_string(t.tensor->cols()) + "', found '" + line + "'");
        }
        if (!in.read(reinterpret_cast<char *>(t.tensor->data()),
                     static_cast<std::streamsize>(t.tensor->size() * sizeof(double)))) {
            throw FormatError("checkpoint: truncated data for tensor " + t.name);
        }
    }
    return p;
}

void save_checkpoint(const std::filesystem::path &path, const ModelParams &params) {
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw FormatError("cannot write checkpoint " + tmp.string());
        }
        write_checkpoint(out, params);
        out.close();
        if (!out) {
            throw FormatError("checkpoint: write failed for " + tmp.string());
        }
    }
    std::filesystem::rename(tmp, path);
}

ModelParams load_checkpoint(const std::filesystem::path &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw FormatError("cannot open checkpoint " + path.string());
    }
    return read_checkpoint(in);
}

} // namespace tiedlm
