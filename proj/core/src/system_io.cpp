#include <erasurekf/system_io.hpp>

#include <erasurekf/errors.hpp>

#include <json.hpp>

#include <fstream>
#include <numeric>
#include <sstream>

namespace erasurekf {
namespace {

using nlohmann::json;

Eigen::MatrixXd parse_matrix(const json& doc, const std::string& field,
                             const std::string& origin) {
    if (!doc.contains(field))
        throw ParseError(origin + ": missing field \"" + field + "\"");
    const json& arr = doc.at(field);
    if (!arr.is_array() || arr.empty())
        throw ParseError(origin + ": field \"" + field + "\" must be a non-empty array of rows");
    const std::size_t rows = arr.size();
    std::size_t cols = 0;
    if (!arr[0].is_array() || arr[0].empty())
        throw ParseError(origin + ": field \"" + field + "\" rows must be non-empty arrays");
    cols = arr[0].size();
    Eigen::MatrixXd M(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (std::size_t i = 0; i < rows; ++i) {
        const json& row = arr[i];
        if (!row.is_array())
            throw ParseError(origin + ": field \"" + field + "\", row " + std::to_string(i) +
                             " is not an array");
        if (row.size() != cols)
            throw ParseError(origin + ": field \"" + field + "\" is ragged: row " +
                             std::to_string(i) + " has " + std::to_string(row.size()) +
                             " entries, expected " + std::to_string(cols));
        for (std::size_t j = 0; j < cols; ++j) {
            if (!row[j].is_number())
                throw ParseError(origin + ": field \"" + field + "\", entry (" +
                                 std::to_string(i) + "," + std::to_string(j) +
                                 ") is not a number");
            M(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                row[j].get<double>();
        }
    }
    return M;
}

json matrix_to_json(const Eigen::MatrixXd& M) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < M.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < M.cols(); ++j) row.push_back(M(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

} // namespace

LinearSystem parse_system(const std::string& text, const std::string& origin) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(origin + ": " + e.what());
    }
    if (!doc.is_object()) throw ParseError(origin + ": top level must be an object");

    LinearSystem sys;
    sys.A = parse_matrix(doc, "A", origin);
    sys.C = parse_matrix(doc, "C", origin);
    sys.Q = parse_matrix(doc, "Q", origin);
    sys.R = parse_matrix(doc, "R", origin);
    sys.Sigma0 = parse_matrix(doc, "Sigma0", origin);

    const Eigen::Index n = sys.A.rows();
    if (doc.contains("x0_mean")) {
        const json& arr = doc.at("x0_mean");
        if (!arr.is_array())
            throw ParseError(origin + ": field \"x0_mean\" must be an array");
        sys.x0_mean.resize(static_cast<Eigen::Index>(arr.size()));
        for (std::size_t i = 0; i < arr.size(); ++i) {
            if (!arr[i].is_number())
                throw ParseError(origin + ": field \"x0_mean\", entry " + std::to_string(i) +
                                 " is not a number");
            sys.x0_mean(static_cast<Eigen::Index>(i)) = arr[i].get<double>();
        }
    } else {
        sys.x0_mean = Eigen::VectorXd::Zero(n);
    }

    if (doc.contains("angle_hint")) {
        const json& h = doc.at("angle_hint");
        if (!h.is_object())
            throw ParseError(origin + ": field \"angle_hint\" must be an object");
        AngleHint hint;
        if (h.value("irrational", false)) {
            hint.irrational = true;
        } else {
            if (!h.contains("numerator") || !h.contains("denominator"))
                throw ParseError(origin +
                                 ": angle_hint needs numerator and denominator, or "
                                 "\"irrational\": true");
            if (!h.at("numerator").is_number_integer() ||
                !h.at("denominator").is_number_integer())
                throw ParseError(origin + ": angle_hint numerator/denominator must be integers");
            hint.numerator = h.at("numerator").get<long long>();
            hint.denominator = h.at("denominator").get<long long>();
            if (hint.denominator <= 0 || hint.numerator <= 0 ||
                hint.numerator >= hint.denominator)
                throw ParseError(origin +
                                 ": angle_hint must satisfy 0 < numerator < denominator");
            const long long g = std::gcd(hint.numerator, hint.denominator);
            hint.numerator /= g;
            hint.denominator /= g;
        }
        sys.angle_hint = hint;
    }

    try {
        check_dimensions(sys);
    } catch (const StructuralError& e) {
        throw StructuralError(origin + ": " + e.what());
    }
    return sys;
}

LinearSystem load_system(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw ParseError("no such file or unreadable: " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_system(buf.str(), path.string());
}

std::string format_system(const LinearSystem& sys) {
    json doc;
    doc["A"] = matrix_to_json(sys.A);
    doc["C"] = matrix_to_json(sys.C);
    doc["Q"] = matrix_to_json(sys.Q);
    doc["R"] = matrix_to_json(sys.R);
    doc["Sigma0"] = matrix_to_json(sys.Sigma0);
    json mean = json::array();
    if (sys.x0_mean.size() == 0) {
        for (Eigen::Index i = 0; i < sys.A.rows(); ++i) mean.push_back(0.0);
    } else {
        for (Eigen::Index i = 0; i < sys.x0_mean.size(); ++i) mean.push_back(sys.x0_mean(i));
    }
    doc["x0_mean"] = std::move(mean);
    if (sys.angle_hint) {
        if (sys.angle_hint->irrational) {
            doc["angle_hint"] = {{"irrational", true}};
        } else {
            doc["angle_hint"] = {{"numerator", sys.angle_hint->numerator},
                                 {"denominator", sys.angle_hint->denominator}};
        }
    }
    return doc.dump(2) + "\n";
}

void save_system(const LinearSystem& sys, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw StructuralError("cannot open for writing: " + path.string());
    out << format_system(sys);
}

} // namespace erasurekf
