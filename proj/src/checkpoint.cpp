#include "maps/checkpoint.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

namespace maps {

namespace {

constexpr const char* kMlpMagic = "maps-mlp-v1";
constexpr const char* kAgentMagic = "maps-agent-v1";
constexpr const char* kManifestMagic = "maps-ensemble-v1";

void write_vec(std::ostream& out, const char* tag, const std::vector<double>& v) {
    out << tag;
    for (double x : v) out << ' ' << std::hexfloat << x;
    out << '\n';
}

std::vector<double> read_vec(std::istream& in, const char* tag, std::size_t n) {
    std::string got;
    in >> got;
    if (got != tag) throw std::runtime_error("checkpoint: expected '" + std::string(tag) +
                                             "', got '" + got + "'");
    std::vector<double> v(n);
    for (double& x : v) {
        std::string tok;
        if (!(in >> tok)) throw std::runtime_error("checkpoint: truncated vector " + got);
        x = std::strtod(tok.c_str(), nullptr);
    }
    return v;
}

void expect(std::istream& in, const std::string& want) {
    std::string got;
    in >> got;
    if (got != want) {
        throw std::runtime_error("checkpoint: expected '" + want + "', got '" + got + "'");
    }
}

}  // namespace

void save_mlp(std::ostream& out, const MlpParams& params) {
    out << kMlpMagic << ' ' << params.layers.size() << '\n';
    for (std::size_t l = 0; l < params.layers.size(); ++l) {
        const auto& lay = params.layers[l];
        out << "layer " << lay.in << ' ' << lay.out << '\n';
        write_vec(out, "w", lay.w);
        write_vec(out, "b", lay.b);
        if (l < params.bn.size()) {
            const auto& s = params.bn[l];
            write_vec(out, "gamma", s.gamma);
            write_vec(out, "beta", s.beta);
            write_vec(out, "rmean", s.running_mean);
            write_vec(out, "rvar", s.running_var);
        }
    }
}

MlpParams load_mlp(std::istream& in) {
    expect(in, kMlpMagic);
    std::size_t n_layers = 0;
    in >> n_layers;
    if (!in || n_layers == 0) throw std::runtime_error("checkpoint: bad layer count");

    MlpParams p;
    for (std::size_t l = 0; l < n_layers; ++l) {
        expect(in, "layer");
        DenseLayer lay;
        in >> lay.in >> lay.out;
        if (!in) throw std::runtime_error("checkpoint: bad layer dims");
        lay.w = read_vec(in, "w", lay.in * lay.out);
        lay.b = read_vec(in, "b", lay.out);
        p.layers.push_back(std::move(lay));
        if (l + 1 < n_layers) {
            BatchNorm s;
            const std::size_t n = p.layers.back().out;
            s.gamma = read_vec(in, "gamma", n);
            s.beta = read_vec(in, "beta", n);
            s.running_mean = read_vec(in, "rmean", n);
            s.running_var = read_vec(in, "rvar", n);
            p.bn.push_back(std::move(s));
        }
    }
    p.validate();
    return p;
}

void save_agent(const std::string& path, const Agent& agent) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write checkpoint " + path);
    out << kAgentMagic << '\n';
    out << "index " << agent.spec.index << '\n';
    out << "input_dim " << agent.spec.input_dim << '\n';
    out << "hidden " << agent.spec.hidden_sizes.size();
    for (auto h : agent.spec.hidden_sizes) out << ' ' << h;
    out << '\n';
    out << "online\n";
    save_mlp(out, agent.online);
    out << "target\n";
    save_mlp(out, agent.target);
    if (!out) throw std::runtime_error("write failed for " + path);
}

Agent load_agent(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read checkpoint " + path);
    try {
        expect(in, kAgentMagic);
        Agent a;
        expect(in, "index");
        in >> a.spec.index;
        expect(in, "input_dim");
        in >> a.spec.input_dim;
        expect(in, "hidden");
        std::size_t n = 0;
        in >> n;
        a.spec.hidden_sizes.resize(n);
        for (auto& h : a.spec.hidden_sizes) in >> h;
        if (!in) throw std::runtime_error("checkpoint: bad agent spec");
        expect(in, "online");
        a.online = load_mlp(in);
        expect(in, "target");
        a.target = load_mlp(in);
        if (a.online.input_dim() != a.spec.input_dim || a.online.output_dim() != 3) {
            throw std::runtime_error("checkpoint: parameter shapes disagree with spec");
        }
        a.adam = AdamState::zeros_like(a.online);
        return a;
    } catch (const std::exception& e) {
        throw std::runtime_error(path + ": " + e.what());
    }
}

void save_ensemble(const std::string& dir, const std::vector<Agent>& agents,
                   std::uint64_t iterations) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    std::ofstream manifest(fs::path(dir) / "manifest.txt");
    if (!manifest) throw std::runtime_error("cannot write manifest in " + dir);
    manifest << kManifestMagic << '\n';
    manifest << "K " << agents.size() << '\n';
    manifest << "f " << (agents.empty() ? 0 : agents.front().spec.input_dim) << '\n';
    manifest << "iterations " << iterations << '\n';
    for (const auto& a : agents) {
        const std::string file = "agent_" + std::to_string(a.spec.index) + ".ckpt";
        manifest << "agent " << a.spec.index << ' ' << file << " hidden "
                 << a.spec.hidden_sizes.size();
        for (auto h : a.spec.hidden_sizes) manifest << ' ' << h;
        manifest << '\n';
        save_agent((fs::path(dir) / file).string(), a);
    }
}

EnsembleCheckpoint load_ensemble(const std::string& dir) {
    namespace fs = std::filesystem;
    std::ifstream manifest(fs::path(dir) / "manifest.txt");
    if (!manifest) throw std::runtime_error("cannot read manifest in " + dir);
    expect(manifest, kManifestMagic);
    std::size_t K = 0, f = 0;
    EnsembleCheckpoint ck;
    expect(manifest, "K");
    manifest >> K;
    expect(manifest, "f");
    manifest >> f;
    expect(manifest, "iterations");
    manifest >> ck.iterations;
    for (std::size_t i = 0; i < K; ++i) {
        expect(manifest, "agent");
        std::size_t idx = 0, nh = 0;
        std::string file;
        manifest >> idx >> file;
        expect(manifest, "hidden");
        manifest >> nh;
        std::vector<std::size_t> hidden(nh);
        for (auto& h : hidden) manifest >> h;
        if (!manifest) throw std::runtime_error("manifest: truncated agent entry");
        Agent a = load_agent((fs::path(dir) / file).string());
        if (a.spec.index != idx || a.spec.input_dim != f || a.spec.hidden_sizes != hidden) {
            throw std::runtime_error("manifest disagrees with " + file);
        }
        ck.agents.push_back(std::move(a));
    }
    if (ck.agents.empty()) throw std::runtime_error("manifest lists no agents");
    return ck;
}

}  // namespace maps
