#include "osg/container_io.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>

#include <json.hpp>

#include "osg/errors.hpp"

namespace osg {

namespace {

using ordered_json = nlohmann::ordered_json;

std::uint64_t bswap64(std::uint64_t v) {
    return __builtin_bswap64(v);
}

void encode_le(const double* src, std::size_t n, std::vector<char>& out) {
    out.resize(n * sizeof(double));
    std::memcpy(out.data(), src, out.size());
    if constexpr (std::endian::native == std::endian::big) {
        auto* words = reinterpret_cast<std::uint64_t*>(out.data());
        for (std::size_t i = 0; i < n; ++i) words[i] = bswap64(words[i]);
    }
}

void decode_le(std::vector<char>& bytes, double* dst, std::size_t n) {
    if constexpr (std::endian::native == std::endian::big) {
        auto* words = reinterpret_cast<std::uint64_t*>(bytes.data());
        for (std::size_t i = 0; i < n; ++i) words[i] = bswap64(words[i]);
    }
    std::memcpy(dst, bytes.data(), n * sizeof(double));
}

std::vector<double> flatten_row_major(const Eigen::MatrixXd& m) {
    std::vector<double> out(static_cast<std::size_t>(m.size()));
    std::size_t k = 0;
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) out[k++] = m(r, c);
    }
    return out;
}

Eigen::MatrixXd unflatten_row_major(const std::vector<double>& data, long long rows,
                                    long long cols) {
    Eigen::MatrixXd m(rows, cols);
    std::size_t k = 0;
    for (Eigen::Index r = 0; r < rows; ++r) {
        for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = data[k++];
    }
    return m;
}

std::string payload_name(const std::string& array_name) { return array_name + ".f64"; }

}  // namespace

long long StoredArray::element_count() const {
    long long n = 1;
    for (long long s : shape) n *= s;
    return n;
}

void ArrayContainer::add(std::string name, std::vector<long long> shape,
                         std::vector<double> data) {
    StoredArray arr{std::move(name), std::move(shape), std::move(data)};
    if (arr.element_count() != static_cast<long long>(arr.data.size())) {
        throw format_error("array '" + arr.name + "' shape does not match its data size");
    }
    arrays_.push_back(std::move(arr));
}

void ArrayContainer::add_matrix(const std::string& name, const Eigen::MatrixXd& m) {
    add(name, {m.rows(), m.cols()}, flatten_row_major(m));
}

void ArrayContainer::add_vector(const std::string& name, const Eigen::VectorXd& v) {
    add(name, {v.size()}, std::vector<double>(v.data(), v.data() + v.size()));
}

bool ArrayContainer::has(const std::string& name) const {
    return std::any_of(arrays_.begin(), arrays_.end(),
                       [&name](const StoredArray& a) { return a.name == name; });
}

const StoredArray& ArrayContainer::array(const std::string& name) const {
    for (const auto& a : arrays_) {
        if (a.name == name) return a;
    }
    throw format_error("container has no array named '" + name + "'");
}

Eigen::MatrixXd ArrayContainer::matrix(const std::string& name) const {
    const StoredArray& a = array(name);
    if (a.shape.size() != 2) {
        throw format_error("array '" + name + "' is not two-dimensional");
    }
    return unflatten_row_major(a.data, a.shape[0], a.shape[1]);
}

Eigen::VectorXd ArrayContainer::vector(const std::string& name) const {
    const StoredArray& a = array(name);
    if (a.shape.size() != 1) throw format_error("array '" + name + "' is not one-dimensional");
    return Eigen::Map<const Eigen::VectorXd>(a.data.data(), static_cast<Eigen::Index>(a.data.size()));
}

void ArrayContainer::set_meta(const std::string& key, const std::string& value) {
    meta.emplace_back(key, value);
}
void ArrayContainer::set_meta(const std::string& key, long long value) {
    meta.emplace_back(key, std::to_string(value));
}
void ArrayContainer::set_meta(const std::string& key, double value) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", value);
    meta.emplace_back(key, buf);
}

std::string ArrayContainer::meta_string(const std::string& key) const {
    for (const auto& [k, v] : meta) {
        if (k == key) return v;
    }
    throw format_error("manifest has no meta key '" + key + "'");
}
long long ArrayContainer::meta_int(const std::string& key) const {
    return std::stoll(meta_string(key));
}
double ArrayContainer::meta_double(const std::string& key) const {
    return std::stod(meta_string(key));
}

void ArrayContainer::write(const std::filesystem::path& dir) const {
    std::filesystem::create_directories(dir);
    ordered_json manifest;
    manifest["format_version"] = kFormatVersion;
    manifest["kind"] = kind;
    manifest["fingerprint"] = std::to_string(fingerprint);
    ordered_json meta_obj = ordered_json::object();
    for (const auto& [k, v] : meta) meta_obj[k] = v;
    manifest["meta"] = meta_obj;
    manifest["arrays"] = ordered_json::array();

    std::vector<char> bytes;
    for (const auto& a : arrays_) {
        ordered_json entry;
        entry["name"] = a.name;
        entry["shape"] = a.shape;
        entry["dtype"] = "f64le";
        entry["file"] = payload_name(a.name);
        manifest["arrays"].push_back(entry);

        encode_le(a.data.data(), a.data.size(), bytes);
        std::ofstream out(dir / payload_name(a.name), std::ios::binary | std::ios::trunc);
        if (!out) throw format_error("cannot write payload " + (dir / payload_name(a.name)).string());
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        if (!out) throw format_error("short write on payload " + payload_name(a.name));
    }

    std::ofstream out(dir / "manifest.json", std::ios::trunc);
    if (!out) throw format_error("cannot write manifest in " + dir.string());
    out << manifest.dump(2) << '\n';
}

ArrayContainer ArrayContainer::read(const std::filesystem::path& dir) {
    const auto manifest_path = dir / "manifest.json";
    std::ifstream in(manifest_path);
    if (!in) throw format_error("missing manifest: " + manifest_path.string());
    ordered_json manifest;
    try {
        in >> manifest;
    } catch (const std::exception& e) {
        throw format_error("malformed manifest " + manifest_path.string() + ": " + e.what());
    }

    const int version = manifest.value("format_version", -1);
    if (version != kFormatVersion) {
        throw format_error("container format version " + std::to_string(version) +
                           " is not supported (expected " + std::to_string(kFormatVersion) +
                           "); migrate the file");
    }

    ArrayContainer c;
    c.kind = manifest.value("kind", "");
    c.fingerprint = std::stoull(manifest.value("fingerprint", "0"));
    if (manifest.contains("meta")) {
        for (const auto& [k, v] : manifest["meta"].items()) {
            c.meta.emplace_back(k, v.get<std::string>());
        }
    }
    for (const auto& entry : manifest["arrays"]) {
        StoredArray a;
        a.name = entry["name"].get<std::string>();
        a.shape = entry["shape"].get<std::vector<long long>>();
        if (entry["dtype"].get<std::string>() != "f64le") {
            throw format_error("array '" + a.name + "' has unsupported dtype");
        }
        const auto path = dir / entry["file"].get<std::string>();
        std::ifstream payload(path, std::ios::binary | std::ios::ate);
        if (!payload) throw format_error("missing payload: " + path.string());
        const auto actual = static_cast<long long>(payload.tellg());
        const long long expected = a.element_count() * 8;
        if (actual != expected) {
            throw format_error("payload " + path.string() + " holds " + std::to_string(actual) +
                               " bytes, expected " + std::to_string(expected));
        }
        payload.seekg(0);
        std::vector<char> bytes(static_cast<std::size_t>(actual));
        payload.read(bytes.data(), actual);
        if (!payload) throw format_error("short read on payload " + path.string());
        a.data.resize(static_cast<std::size_t>(a.element_count()));
        decode_le(bytes, a.data.data(), a.data.size());
        c.arrays_.push_back(std::move(a));
    }
    return c;
}

namespace {

void expect_kind(const ArrayContainer& c, const std::string& kind,
                 const std::filesystem::path& dir) {
    if (c.kind != kind) {
        throw format_error(dir.string() + " holds a '" + c.kind + "' container, expected '" +
                           kind + "'");
    }
}

void add_grid_arrays(ArrayContainer& c, const RegionGrid& grid) {
    c.add_vector("latitudes", grid.latitudes);
    c.add_vector("longitudes", grid.longitudes);
    Eigen::MatrixXd mask(grid.lat_count(), grid.lon_count());
    for (Eigen::Index i = 0; i < mask.rows(); ++i) {
        for (Eigen::Index j = 0; j < mask.cols(); ++j) mask(i, j) = grid.mask(i, j) ? 1.0 : 0.0;
    }
    c.add_matrix("mask", mask);
}

RegionGrid grid_from_arrays(const ArrayContainer& c) {
    const Eigen::MatrixXd mask_values = c.matrix("mask");
    Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> mask(mask_values.rows(), mask_values.cols());
    for (Eigen::Index i = 0; i < mask.rows(); ++i) {
        for (Eigen::Index j = 0; j < mask.cols(); ++j) mask(i, j) = mask_values(i, j) != 0.0;
    }
    return make_region_grid(c.vector("latitudes"), c.vector("longitudes"), std::move(mask));
}

void add_basis_arrays(ArrayContainer& c, const SlepianBasis& basis) {
    c.add_vector("eigenvalues", basis.eigenvalues);
    c.add_matrix("spectral", basis.spectral);
    c.add_matrix("basis_samples", basis.samples);
    c.set_meta("band_limit", static_cast<long long>(basis.band_limit));
    c.set_meta("basis_count", static_cast<long long>(basis.count()));
}

SlepianBasis basis_from_arrays(const ArrayContainer& c, const RegionGrid& grid) {
    SlepianBasis basis;
    basis.eigenvalues = c.vector("eigenvalues");
    basis.spectral = c.matrix("spectral");
    basis.samples = c.matrix("basis_samples");
    basis.band_limit = static_cast<int>(c.meta_int("band_limit"));
    basis.fingerprint = grid_fingerprint(grid);
    basis.masked_cells = grid.masked_cells();
    basis.masked_weights = grid.masked_weights();
    basis.shannon = shannon_number(grid.area_fraction(), basis.band_limit);
    if (basis.samples.rows() != static_cast<Eigen::Index>(basis.masked_cells.size())) {
        throw format_error("basis samples do not match the grid mask size");
    }
    return basis;
}

}  // namespace

void write_grid(const std::filesystem::path& dir, const RegionGrid& grid) {
    ArrayContainer c;
    c.kind = "region_grid";
    c.fingerprint = grid_fingerprint(grid);
    add_grid_arrays(c, grid);
    c.write(dir);
}

RegionGrid read_grid(const std::filesystem::path& dir) {
    const ArrayContainer c = ArrayContainer::read(dir);
    expect_kind(c, "region_grid", dir);
    RegionGrid grid = grid_from_arrays(c);
    if (grid_fingerprint(grid) != c.fingerprint) {
        throw format_error("grid fingerprint mismatch in " + dir.string());
    }
    return grid;
}

void write_block(const std::filesystem::path& dir, const EnsembleBlock& block) {
    ArrayContainer c;
    c.kind = "ensemble_block";
    c.fingerprint = block.fingerprint;
    c.set_meta("ensembles", static_cast<long long>(block.ensembles));
    c.set_meta("steps", static_cast<long long>(block.steps));
    c.set_meta("time_offset", static_cast<long long>(block.time_offset));
    for (auto var : {0, 1}) {
        // Column-major (cell, r*tau + t) memory equals row-major [R, tau, cell].
        const auto& m = block.values[var];
        std::vector<double> data(m.data(), m.data() + m.size());
        c.add(var == 0 ? "u" : "v",
              {block.ensembles, block.steps, m.rows()}, std::move(data));
    }
    c.write(dir);
}

EnsembleBlock read_block(const std::filesystem::path& dir) {
    const ArrayContainer c = ArrayContainer::read(dir);
    expect_kind(c, "ensemble_block", dir);
    EnsembleBlock block;
    block.ensembles = static_cast<int>(c.meta_int("ensembles"));
    block.steps = static_cast<int>(c.meta_int("steps"));
    block.time_offset = c.meta_int("time_offset");
    block.fingerprint = c.fingerprint;
    for (auto var : {0, 1}) {
        const StoredArray& a = c.array(var == 0 ? "u" : "v");
        if (a.shape.size() != 3 || a.shape[0] != block.ensembles || a.shape[1] != block.steps) {
            throw format_error("block array shape is inconsistent with its manifest");
        }
        const long long cells = a.shape[2];
        block.values[var] = Eigen::Map<const Eigen::MatrixXd>(
            a.data.data(), cells, static_cast<Eigen::Index>(block.ensembles) * block.steps);
    }
    return block;
}

void write_basis(const std::filesystem::path& dir, const BasisBundle& bundle) {
    ArrayContainer c;
    c.kind = "slepian_basis";
    c.fingerprint = bundle.basis.fingerprint;
    add_grid_arrays(c, bundle.grid);
    add_basis_arrays(c, bundle.basis);
    c.add_vector("full_spectrum", bundle.full_spectrum);
    c.write(dir);
}

BasisBundle read_basis(const std::filesystem::path& dir) {
    const ArrayContainer c = ArrayContainer::read(dir);
    expect_kind(c, "slepian_basis", dir);
    BasisBundle bundle;
    bundle.grid = grid_from_arrays(c);
    if (grid_fingerprint(bundle.grid) != c.fingerprint) {
        throw format_error("basis fingerprint does not match its grid in " + dir.string());
    }
    bundle.basis = basis_from_arrays(c, bundle.grid);
    bundle.full_spectrum = c.vector("full_spectrum");
    return bundle;
}

void save_state(const std::filesystem::path& dir, const StateBundle& bundle) {
    const OsgModel& model = bundle.model;
    ArrayContainer c;
    c.kind = "osg_state";
    c.fingerprint = model.basis.fingerprint;
    add_grid_arrays(c, bundle.grid);
    add_basis_arrays(c, model.basis);

    c.add_matrix("mean_u", model.mean[0]);
    c.add_matrix("mean_v", model.mean[1]);
    c.add_matrix("sd_u", model.resid_sd[0]);
    c.add_matrix("sd_v", model.resid_sd[1]);
    c.add_vector("gamma_u", model.moments.gamma[0]);
    c.add_vector("gamma_v", model.moments.gamma[1]);
    c.add_vector("kappa_u", model.moments.kappa[0]);
    c.add_vector("kappa_v", model.moments.kappa[1]);
    c.add_matrix("phi", model.var.coeff);
    c.add_matrix("k", model.var.innovation_cov);
    c.add_matrix("x", model.var.gram);
    Eigen::VectorXd ledger(model.block_lengths.size());
    for (std::size_t i = 0; i < model.block_lengths.size(); ++i) {
        ledger[static_cast<Eigen::Index>(i)] = static_cast<double>(model.block_lengths[i]);
    }
    c.add_vector("block_lengths", ledger);
    if (model.options.tgh) {
        for (auto var : {0, 1}) {
            const auto& states = model.g_states[var];
            Eigen::VectorXd g(states.size()), slope(states.size()), init(states.size());
            for (std::size_t i = 0; i < states.size(); ++i) {
                const auto idx = static_cast<Eigen::Index>(i);
                g[idx] = states[i].g;
                slope[idx] = states[i].slope;
                init[idx] = states[i].initialized ? 1.0 : 0.0;
            }
            const std::string suffix = var == 0 ? "_u" : "_v";
            c.add_vector("g" + suffix, g);
            c.add_vector("g_slope" + suffix, slope);
            c.add_vector("g_init" + suffix, init);
        }
    }

    c.set_meta("ensembles", static_cast<long long>(model.ensembles));
    c.set_meta("order", static_cast<long long>(model.order));
    c.set_meta("total_steps", static_cast<long long>(model.total_steps));
    c.set_meta("accumulated_steps", static_cast<long long>(model.moments.accumulated_steps));
    c.set_meta("effective_samples", static_cast<long long>(model.var.effective_samples));
    c.set_meta("ridge", model.options.ridge);
    c.set_meta("tgh", static_cast<long long>(model.options.tgh ? 1 : 0));
    c.set_meta("cumulative_retransform",
               static_cast<long long>(model.options.cumulative_retransform ? 1 : 0));
    c.write(dir);
}

StateBundle load_state(const std::filesystem::path& dir) {
    const ArrayContainer c = ArrayContainer::read(dir);
    expect_kind(c, "osg_state", dir);
    StateBundle bundle;
    bundle.grid = grid_from_arrays(c);
    if (grid_fingerprint(bundle.grid) != c.fingerprint) {
        throw format_error("state fingerprint does not match its grid in " + dir.string());
    }

    OsgModel& model = bundle.model;
    model.basis = basis_from_arrays(c, bundle.grid);
    model.ensembles = static_cast<int>(c.meta_int("ensembles"));
    model.order = static_cast<int>(c.meta_int("order"));
    model.total_steps = c.meta_int("total_steps");
    model.options.ridge = c.meta_double("ridge");
    model.options.tgh = c.meta_int("tgh") != 0;
    model.options.cumulative_retransform = c.meta_int("cumulative_retransform") != 0;

    model.mean[0] = c.matrix("mean_u");
    model.mean[1] = c.matrix("mean_v");
    model.resid_sd[0] = c.matrix("sd_u");
    model.resid_sd[1] = c.matrix("sd_v");
    model.moments.gamma[0] = c.vector("gamma_u");
    model.moments.gamma[1] = c.vector("gamma_v");
    model.moments.kappa[0] = c.vector("kappa_u");
    model.moments.kappa[1] = c.vector("kappa_v");
    model.moments.accumulated_steps = c.meta_int("accumulated_steps");
    model.var.coeff = c.matrix("phi");
    model.var.innovation_cov = c.matrix("k");
    model.var.gram = c.matrix("x");
    model.var.effective_samples = c.meta_int("effective_samples");
    model.var.order = model.order;
    model.var.basis_count = static_cast<int>(model.basis.count());
    const Eigen::VectorXd ledger = c.vector("block_lengths");
    model.block_lengths.assign(ledger.size(), 0);
    for (Eigen::Index i = 0; i < ledger.size(); ++i) {
        model.block_lengths[static_cast<std::size_t>(i)] = static_cast<long>(ledger[i]);
    }
    if (model.options.tgh) {
        for (auto var : {0, 1}) {
            const std::string suffix = var == 0 ? "_u" : "_v";
            const Eigen::VectorXd g = c.vector("g" + suffix);
            const Eigen::VectorXd slope = c.vector("g_slope" + suffix);
            const Eigen::VectorXd init = c.vector("g_init" + suffix);
            model.g_states[var].resize(static_cast<std::size_t>(g.size()));
            for (Eigen::Index i = 0; i < g.size(); ++i) {
                auto& st = model.g_states[var][static_cast<std::size_t>(i)];
                st.g = g[i];
                st.slope = slope[i];
                st.initialized = init[i] != 0.0;
            }
        }
    }
    return bundle;
}

void write_truth(const std::filesystem::path& dir, const SyntheticTruth& truth,
                 const RegionGrid& grid) {
    ArrayContainer c;
    c.kind = "synthetic_truth";
    c.fingerprint = truth.basis.fingerprint;
    add_grid_arrays(c, grid);
    add_basis_arrays(c, truth.basis);
    c.add_matrix("phi", truth.coeff);
    c.add_matrix("k", truth.innovation_cov);
    for (auto var : {0, 1}) {
        const std::string suffix = var == 0 ? "_u" : "_v";
        c.add_vector("omega" + suffix, truth.omega[var]);
        c.add_vector("h" + suffix, truth.h[var]);
        c.add_vector("mean" + suffix, truth.mean_cell[var]);
        c.add_vector("resid_sd" + suffix, truth.resid_sd_cell[var]);
    }
    c.set_meta("order", static_cast<long long>(truth.order));
    c.write(dir);
}

SyntheticTruth read_truth(const std::filesystem::path& dir, RegionGrid* grid_out) {
    const ArrayContainer c = ArrayContainer::read(dir);
    expect_kind(c, "synthetic_truth", dir);
    RegionGrid grid = grid_from_arrays(c);
    SyntheticTruth truth;
    truth.basis = basis_from_arrays(c, grid);
    truth.order = static_cast<int>(c.meta_int("order"));
    truth.coeff = c.matrix("phi");
    truth.innovation_cov = c.matrix("k");
    for (auto var : {0, 1}) {
        const std::string suffix = var == 0 ? "_u" : "_v";
        truth.omega[var] = c.vector("omega" + suffix);
        truth.h[var] = c.vector("h" + suffix);
        truth.mean_cell[var] = c.vector("mean" + suffix);
        truth.resid_sd_cell[var] = c.vector("resid_sd" + suffix);
    }
    validate_truth(truth);
    if (grid_out != nullptr) *grid_out = std::move(grid);
    return truth;
}

StateLock::StateLock(const std::filesystem::path& dir) : path_(dir / ".lock") {
    std::filesystem::create_directories(dir);
    const int fd = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
    if (fd < 0) {
        throw sequencing_error("state directory " + dir.string() +
                               " is locked by another writer (remove " + path_.string() +
                               " if stale)");
    }
    ::close(fd);
    held_ = true;
}

StateLock::~StateLock() {
    if (held_) {
        std::error_code ec;
        std::filesystem::remove(path_, ec);
    }
}

}  // namespace osg
