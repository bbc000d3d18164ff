#include "twohop/model/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>

#include "twohop/util/hash.hpp"
#include "twohop/util/jsonl.hpp"

namespace twohop::model {

namespace {

constexpr char kMagic[4] = {'T', 'H', 'C', 'K'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::string& buf, std::uint32_t v) {
    char b[4];
    std::memcpy(b, &v, 4);
    buf.append(b, 4);
}

void put_u64(std::string& buf, std::uint64_t v) {
    char b[8];
    std::memcpy(b, &v, 8);
    buf.append(b, 8);
}

class Reader {
public:
    explicit Reader(std::string data) : data_(std::move(data)) {}

    const char* take(std::size_t n) {
        if (pos_ + n > data_.size()) throw std::runtime_error("checkpoint truncated");
        const char* p = data_.data() + pos_;
        pos_ += n;
        return p;
    }
    std::uint32_t u32() {
        std::uint32_t v;
        std::memcpy(&v, take(4), 4);
        return v;
    }
    std::uint64_t u64() {
        std::uint64_t v;
        std::memcpy(&v, take(8), 8);
        return v;
    }
    std::size_t pos() const { return pos_; }
    const std::string& data() const { return data_; }

private:
    std::string data_;
    std::size_t pos_ = 0;
};

}  // namespace

void save_checkpoint(const ToyConfig& cfg, const ToyTensorsT<float>& params, const Tokenizer& tok,
                     const std::filesystem::path& path) {
    std::string buf;
    buf.append(kMagic, 4);
    put_u32(buf, kVersion);

    const std::string meta =
        nlohmann::json{{"config", cfg.to_json()}, {"tokenizer", tok.to_json()}}.dump();
    put_u64(buf, meta.size());
    buf += meta;

    auto refs = named_tensors(const_cast<ToyTensorsT<float>&>(params));
    put_u32(buf, (std::uint32_t)refs.size());
    for (const auto& ref : refs) {
        put_u32(buf, (std::uint32_t)ref.name.size());
        buf += ref.name;
        put_u64(buf, ref.data->size());
        buf.append(reinterpret_cast<const char*>(ref.data->data()),
                   ref.data->size() * sizeof(float));
    }
    put_u64(buf, util::fnv1a64(buf));

    util::ensure_parent_dir(path);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write checkpoint: " + path.string());
    out.write(buf.data(), (std::streamsize)buf.size());
    if (!out) throw std::runtime_error("short write to checkpoint: " + path.string());
}

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open checkpoint: " + path.string());
    std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

    if (data.size() < 16) throw std::runtime_error("checkpoint too small: " + path.string());
    const std::uint64_t stored_hash = [&] {
        std::uint64_t v;
        std::memcpy(&v, data.data() + data.size() - 8, 8);
        return v;
    }();
    if (util::fnv1a64(std::string_view(data.data(), data.size() - 8)) != stored_hash)
        throw std::runtime_error("checkpoint content hash mismatch: " + path.string());

    Reader r(std::move(data));
    if (std::memcmp(r.take(4), kMagic, 4) != 0)
        throw std::runtime_error("not a checkpoint file: " + path.string());
    if (r.u32() != kVersion) throw std::runtime_error("unsupported checkpoint version");

    const std::uint64_t meta_len = r.u64();
    const nlohmann::json meta = nlohmann::json::parse(std::string(r.take(meta_len), meta_len));

    LoadedCheckpoint ck;
    ck.config = ToyConfig::from_json(meta.at("config"));
    ck.tokenizer = Tokenizer::from_json(meta.at("tokenizer"));
    ck.params = ToyTensorsT<float>::shaped(ck.config);

    auto refs = named_tensors(ck.params);
    const std::uint32_t count = r.u32();
    if (count != refs.size()) throw std::runtime_error("checkpoint tensor count mismatch");
    for (auto& ref : refs) {
        const std::uint32_t name_len = r.u32();
        const std::string name(r.take(name_len), name_len);
        if (name != ref.name)
            throw std::runtime_error("checkpoint tensor order mismatch at " + name);
        const std::uint64_t n = r.u64();
        if (n != ref.data->size())
            throw std::runtime_error("checkpoint tensor size mismatch at " + name);
        std::memcpy(ref.data->data(), r.take(n * sizeof(float)), n * sizeof(float));
    }
    return ck;
}

}  // namespace twohop::model
