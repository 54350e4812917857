#include "nnquad/network.hpp"

#include "nnquad/errors.hpp"

#include "json.hpp"

#include <cmath>
#include <fstream>
#include <functional>
#include <numeric>
#include <sstream>

namespace nnquad {

std::string_view to_string(Activation act) {
    switch (act) {
    case Activation::relu: return "relu";
    case Activation::tanh: return "tanh";
    case Activation::sigmoid: return "sigmoid";
    case Activation::identity: return "identity";
    }
    return "?";
}

Activation parse_activation(std::string_view tag) {
    if (tag == "relu") return Activation::relu;
    if (tag == "tanh") return Activation::tanh;
    if (tag == "sigmoid") return Activation::sigmoid;
    if (tag == "identity") return Activation::identity;
    throw ValidationError("unknown activation tag '" + std::string(tag) + "'");
}

double apply_activation(Activation act, double y) {
    switch (act) {
    case Activation::relu: return y > 0.0 ? y : 0.0;
    case Activation::tanh: return std::tanh(y);
    case Activation::sigmoid:
        if (y >= 0.0)
            return 1.0 / (1.0 + std::exp(-y));
        else {
            const double e = std::exp(y);
            return e / (1.0 + e);
        }
    case Activation::identity: return y;
    }
    return y;
}

ConvLayer::ConvLayer(Matrix kernel, Vector bias, ConvShape input_shape, std::size_t stride,
                     std::size_t padding, Activation activation)
    : kernel_(std::move(kernel)),
      bias_(std::move(bias)),
      input_shape_(std::move(input_shape)),
      stride_(stride),
      padding_(padding),
      activation_(activation),
      lowered_(conv_to_matrix(kernel_, bias_, input_shape_, stride_, padding_)) {}

AffineView affine_view(const DenseLayer& layer) {
    return {layer.weight, layer.bias, layer.activation};
}

AffineView affine_view(const ConvLayer& layer) {
    return {layer.lowered_weight(), layer.lowered_bias(), layer.activation()};
}

AffineView affine_view(const InnerLayer& layer) {
    return std::visit([](const auto& l) { return affine_view(l); }, layer);
}

namespace {

bool is_hidden_activation(Activation act) { return act != Activation::identity; }

// Checks one dense/conv layer against the incoming width; returns its output width.
std::size_t check_affine(const DenseLayer& dense, std::size_t width, const std::string& name) {
    if (dense.weight.cols() != width)
        throw ValidationError(name + ": weight " + dense.weight.shape_string() +
                              " expects input width " + std::to_string(dense.weight.cols()) +
                              " but receives width " + std::to_string(width));
    if (dense.bias.size() != dense.weight.rows())
        throw ValidationError(name + ": bias length " + std::to_string(dense.bias.size()) +
                              " does not match weight rows " + std::to_string(dense.weight.rows()));
    if (!dense.weight.all_finite() || !dense.bias.all_finite())
        throw ValidationError(name + ": non-finite parameter");
    return dense.weight.rows();
}

std::size_t check_affine(const ConvLayer& conv, std::size_t width, const std::string& name) {
    if (conv.input_size() != width)
        throw ValidationError(name + ": convolution input shape holds " +
                              std::to_string(conv.input_size()) + " values but receives width " +
                              std::to_string(width));
    if (!conv.kernel().all_finite() || !conv.bias().all_finite())
        throw ValidationError(name + ": non-finite parameter");
    return conv.output_size();
}

template <class L>
std::size_t check_layer(const L& layer, std::size_t width, const std::string& name,
                        bool identity_allowed) {
    const std::size_t out = check_affine(layer, width, name);
    if (!identity_allowed && !is_hidden_activation(affine_view(layer).activation))
        throw ValidationError(name + ": hidden layer must use relu, tanh or sigmoid");
    return out;
}

}  // namespace

Network::Network(std::size_t input_dim, std::vector<Layer> layers)
    : input_dim_(input_dim), output_dim_(0), layers_(std::move(layers)) {
    if (input_dim_ == 0)
        throw ValidationError("input_dim must be >= 1");
    if (layers_.empty())
        throw ValidationError("network needs at least one layer");

    std::size_t width = input_dim_;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        const std::string name = "layer " + std::to_string(i + 1);
        const bool last = i + 1 == layers_.size();
        const Layer& layer = layers_[i];

        if (const auto* block = std::get_if<ResidualBlock>(&layer)) {
            if (last)
                throw ValidationError(name + ": output layer must be dense, found residual");
            if (block->layers.empty())
                throw ValidationError(name + ": residual block has no layers");
            std::size_t inner = width;
            for (std::size_t j = 0; j < block->layers.size(); ++j) {
                const bool inner_last = j + 1 == block->layers.size();
                inner = std::visit(
                    [&](const auto& l) {
                        return check_layer(l, inner, name + "." + std::to_string(j + 1),
                                           inner_last);
                    },
                    block->layers[j]);
            }
            if (inner != width)
                throw ValidationError(name + ": residual block maps width " +
                                      std::to_string(width) + " to " + std::to_string(inner));
            continue;
        }

        if (last) {
            if (!std::holds_alternative<DenseLayer>(layer))
                throw ValidationError(name + ": output layer must be dense");
            if (std::get<DenseLayer>(layer).activation != Activation::identity)
                throw ValidationError(name + ": output layer must use identity activation, got " +
                                      std::string(to_string(std::get<DenseLayer>(layer).activation)));
        }
        if (const auto* dense = std::get_if<DenseLayer>(&layer))
            width = check_layer(*dense, width, name, last);
        else
            width = check_layer(std::get<ConvLayer>(layer), width, name, last);
    }
    output_dim_ = width;
}

bool Network::is_relu() const noexcept {
    auto ok = [](const InnerLayer& l) {
        const Activation a = affine_view(l).activation;
        return a == Activation::relu || a == Activation::identity;
    };
    for (const Layer& layer : layers_) {
        if (const auto* block = std::get_if<ResidualBlock>(&layer)) {
            for (const auto& inner : block->layers)
                if (!ok(inner))
                    return false;
        } else if (const auto* dense = std::get_if<DenseLayer>(&layer)) {
            if (!ok(*dense))
                return false;
        } else if (!ok(std::get<ConvLayer>(layer))) {
            return false;
        }
    }
    return true;
}

std::size_t Network::parameter_count() const noexcept {
    auto count = [](const InnerLayer& l) -> std::size_t {
        if (const auto* d = std::get_if<DenseLayer>(&l))
            return d->weight.rows() * d->weight.cols() + d->bias.size();
        const auto& c = std::get<ConvLayer>(l);
        return c.kernel().rows() * c.kernel().cols() + c.bias().size();
    };
    std::size_t total = 0;
    for (const Layer& layer : layers_) {
        if (const auto* block = std::get_if<ResidualBlock>(&layer)) {
            for (const auto& inner : block->layers)
                total += count(inner);
        } else if (const auto* dense = std::get_if<DenseLayer>(&layer)) {
            total += count(*dense);
        } else {
            total += count(std::get<ConvLayer>(layer));
        }
    }
    return total;
}

void require_relu(const Network& net) {
    if (!net.is_relu())
        throw UnsupportedActivation(
            "piecewise-linear integration requires relu hidden activations");
}

namespace {

Vector apply_affine(const AffineView& view, const Vector& x) {
    Vector y = matvec(view.weight, x);
    for (std::size_t i = 0; i < y.size(); ++i)
        y[i] = apply_activation(view.activation, y[i] + view.bias[i]);
    return y;
}

}  // namespace

Vector forward(const Network& net, const Vector& x) {
    if (x.size() != net.input_dim())
        throw ShapeError("forward: input has length " + std::to_string(x.size()) +
                         ", network expects " + std::to_string(net.input_dim()));
    Vector cur = x;
    for (const Layer& layer : net.layers()) {
        if (const auto* block = std::get_if<ResidualBlock>(&layer)) {
            Vector inner = cur;
            for (const auto& l : block->layers)
                inner = apply_affine(affine_view(l), inner);
            cur += inner;
        } else if (const auto* dense = std::get_if<DenseLayer>(&layer)) {
            cur = apply_affine(affine_view(*dense), cur);
        } else {
            cur = apply_affine(affine_view(std::get<ConvLayer>(layer)), cur);
        }
    }
    return cur;
}

std::vector<Vector> forward_batch(const Network& net, const std::vector<Vector>& xs) {
    std::vector<Vector> out;
    out.reserve(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) {
        try {
            out.push_back(forward(net, xs[i]));
        } catch (const ShapeError& e) {
            throw ShapeError("batch item " + std::to_string(i) + ": " + e.what());
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Weight file

namespace {

using json = nlohmann::json;

class Reader {
public:
    static const json& at(const json& obj, const std::string& key, const std::string& path) {
        if (!obj.is_object())
            throw ParseError("expected an object", path.empty() ? "/" : path);
        auto it = obj.find(key);
        if (it == obj.end())
            throw ParseError("missing key '" + key + "'", path.empty() ? "/" : path);
        return *it;
    }

    static void only_keys(const json& obj, std::initializer_list<std::string_view> keys,
                          const std::string& path) {
        for (const auto& [k, v] : obj.items()) {
            bool known = false;
            for (auto want : keys)
                known = known || k == want;
            if (!known)
                throw ParseError("unexpected key '" + k + "'", path.empty() ? "/" : path);
        }
    }

    static std::size_t count(const json& v, const std::string& path) {
        if (!v.is_number_unsigned())
            throw ParseError("expected a non-negative integer", path);
        return v.get<std::size_t>();
    }

    static std::vector<double> floats(const json& v, const std::string& path) {
        if (!v.is_array())
            throw ParseError("expected an array of numbers", path);
        std::vector<double> out;
        out.reserve(v.size());
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (!v[i].is_number())
                throw ParseError("expected a number", path + "/" + std::to_string(i));
            out.push_back(v[i].get<double>());
        }
        return out;
    }

    static std::vector<std::vector<double>> rows(const json& v, const std::string& path) {
        if (!v.is_array())
            throw ParseError("expected an array of rows", path);
        std::vector<std::vector<double>> out;
        for (std::size_t i = 0; i < v.size(); ++i)
            out.push_back(floats(v[i], path + "/" + std::to_string(i)));
        return out;
    }

    static std::string string(const json& v, const std::string& path) {
        if (!v.is_string())
            throw ParseError("expected a string", path);
        return v.get<std::string>();
    }
};

Matrix matrix_for(const std::vector<std::vector<double>>& rows, const std::string& name) {
    try {
        return Matrix::from_rows(rows);
    } catch (const ShapeError& e) {
        throw ValidationError(name + ": " + e.what());
    }
}

Activation activation_for(const std::string& tag, const std::string& name) {
    try {
        return parse_activation(tag);
    } catch (const ValidationError& e) {
        throw ValidationError(name + ": " + e.what());
    }
}

InnerLayer parse_affine(const Reader& rd, const json& rec, const std::string& path,
                        const std::string& name, const std::string& kind) {
    if (kind == "dense") {
        Reader::only_keys(rec, {"kind", "weight", "bias", "activation"}, path);
        auto w = Reader::rows(rd.at(rec, "weight", path), path + "/weight");
        auto b = Reader::floats(rd.at(rec, "bias", path), path + "/bias");
        auto act = Reader::string(rd.at(rec, "activation", path), path + "/activation");
        const Activation a = activation_for(act, name);
        Matrix m = matrix_for(w, name);
        return DenseLayer{std::move(m), Vector(std::move(b)), a};
    }
    Reader::only_keys(rec, {"kind", "kernel", "bias", "input_shape", "stride", "padding",
                            "activation"},
                      path);
    auto k = Reader::rows(rd.at(rec, "kernel", path), path + "/kernel");
    auto b = Reader::floats(rd.at(rec, "bias", path), path + "/bias");
    const json& shape_json = rd.at(rec, "input_shape", path);
    if (!shape_json.is_array())
        throw ParseError("expected an array of integers", path + "/input_shape");
    ConvShape shape;
    for (std::size_t i = 0; i < shape_json.size(); ++i)
        shape.push_back(Reader::count(shape_json[i], path + "/input_shape/" + std::to_string(i)));
    const std::size_t stride = Reader::count(rd.at(rec, "stride", path), path + "/stride");
    const std::size_t padding = Reader::count(rd.at(rec, "padding", path), path + "/padding");
    auto act = Reader::string(rd.at(rec, "activation", path), path + "/activation");
    try {
        return ConvLayer(matrix_for(k, name), Vector(std::move(b)), std::move(shape), stride,
                         padding, activation_for(act, name));
    } catch (const ShapeError& e) {
        throw ValidationError(name + ": " + e.what());
    }
}

}  // namespace

Network load_network(std::string_view text) {
    json root;
    try {
        root = json::parse(text.begin(), text.end());
    } catch (const json::parse_error& e) {
        throw ParseError(e.what(), "byte " + std::to_string(e.byte));
    }
    const Reader rd;
    Reader::only_keys(root, {"format_version", "input_dim", "layers"}, "");
    const std::size_t version = Reader::count(rd.at(root, "format_version", ""), "/format_version");
    if (version != 1)
        throw ParseError("unsupported format_version " + std::to_string(version),
                         "/format_version");
    const std::size_t input_dim = Reader::count(rd.at(root, "input_dim", ""), "/input_dim");
    const json& layers_json = rd.at(root, "layers", "");
    if (!layers_json.is_array())
        throw ParseError("expected an array of layers", "/layers");

    std::vector<Layer> layers;
    for (std::size_t i = 0; i < layers_json.size(); ++i) {
        const std::string path = "/layers/" + std::to_string(i);
        const std::string name = "layer " + std::to_string(i + 1);
        const json& rec = layers_json[i];
        const std::string kind = Reader::string(rd.at(rec, "kind", path), path + "/kind");
        if (kind == "dense" || kind == "conv") {
            InnerLayer l = parse_affine(rd, rec, path, name, kind);
            std::visit([&](auto&& v) { layers.emplace_back(std::move(v)); }, std::move(l));
        } else if (kind == "residual") {
            Reader::only_keys(rec, {"kind", "layers"}, path);
            const json& inner_json = rd.at(rec, "layers", path);
            if (!inner_json.is_array())
                throw ParseError("expected an array of layers", path + "/layers");
            ResidualBlock block;
            for (std::size_t j = 0; j < inner_json.size(); ++j) {
                const std::string ipath = path + "/layers/" + std::to_string(j);
                const std::string iname = name + "." + std::to_string(j + 1);
                const std::string ikind =
                    Reader::string(rd.at(inner_json[j], "kind", ipath), ipath + "/kind");
                if (ikind != "dense" && ikind != "conv")
                    throw ValidationError(iname + ": residual blocks hold dense or conv layers, got '" +
                                          ikind + "'");
                block.layers.push_back(parse_affine(rd, inner_json[j], ipath, iname, ikind));
            }
            layers.emplace_back(std::move(block));
        } else {
            throw ValidationError(name + ": unknown layer kind '" + kind + "'");
        }
    }
    return Network(input_dim, std::move(layers));
}

namespace {

// Shortest decimal that round-trips the double; integral values keep a ".0".
std::string number(double x) { return json(x).dump(); }

void emit_floats(std::ostream& os, std::span<const double> xs) {
    os << '[';
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (i)
            os << ", ";
        os << number(xs[i]);
    }
    os << ']';
}

void emit_rows(std::ostream& os, const Matrix& m, const std::string& indent) {
    os << "[\n";
    for (std::size_t r = 0; r < m.rows(); ++r) {
        os << indent << "  ";
        emit_floats(os, m.row(r));
        os << (r + 1 < m.rows() ? ",\n" : "\n");
    }
    os << indent << ']';
}

void emit_affine(std::ostream& os, const InnerLayer& layer, const std::string& indent) {
    const std::string in = indent + "  ";
    os << indent << "{\n";
    if (const auto* d = std::get_if<DenseLayer>(&layer)) {
        os << in << "\"kind\": \"dense\",\n";
        os << in << "\"weight\": ";
        emit_rows(os, d->weight, in);
        os << ",\n" << in << "\"bias\": ";
        emit_floats(os, d->bias.span());
        os << ",\n" << in << "\"activation\": \"" << to_string(d->activation) << "\"\n";
    } else {
        const auto& c = std::get<ConvLayer>(layer);
        os << in << "\"kind\": \"conv\",\n";
        os << in << "\"kernel\": ";
        emit_rows(os, c.kernel(), in);
        os << ",\n" << in << "\"bias\": ";
        emit_floats(os, c.bias().span());
        os << ",\n" << in << "\"input_shape\": [";
        for (std::size_t i = 0; i < c.input_shape().size(); ++i)
            os << (i ? ", " : "") << c.input_shape()[i];
        os << "],\n";
        os << in << "\"stride\": " << c.stride() << ",\n";
        os << in << "\"padding\": " << c.padding() << ",\n";
        os << in << "\"activation\": \"" << to_string(c.activation()) << "\"\n";
    }
    os << indent << '}';
}

}  // namespace

std::string save_network(const Network& net) {
    std::ostringstream os;
    os << "{\n";
    os << "  \"format_version\": 1,\n";
    os << "  \"input_dim\": " << net.input_dim() << ",\n";
    os << "  \"layers\": [\n";
    const auto& layers = net.layers();
    for (std::size_t i = 0; i < layers.size(); ++i) {
        if (const auto* block = std::get_if<ResidualBlock>(&layers[i])) {
            os << "    {\n      \"kind\": \"residual\",\n      \"layers\": [\n";
            for (std::size_t j = 0; j < block->layers.size(); ++j) {
                emit_affine(os, block->layers[j], "        ");
                os << (j + 1 < block->layers.size() ? ",\n" : "\n");
            }
            os << "      ]\n    }";
        } else if (const auto* d = std::get_if<DenseLayer>(&layers[i])) {
            emit_affine(os, *d, "    ");
        } else {
            emit_affine(os, std::get<ConvLayer>(layers[i]), "    ");
        }
        os << (i + 1 < layers.size() ? ",\n" : "\n");
    }
    os << "  ]\n}\n";
    return os.str();
}

Network load_network_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error("cannot open network file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return load_network(buf.str());
}

void save_network_file(const Network& net, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw Error("cannot write network file '" + path + "'");
    out << save_network(net);
    if (!out)
        throw Error("failed writing network file '" + path + "'");
}

}  // namespace nnquad
