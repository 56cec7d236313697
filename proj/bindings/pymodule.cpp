#include <cstring>
#include <string>
#include <vector>

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "iatfp/augment.hpp"
#include "iatfp/cli_app.hpp"
#include "iatfp/convnet.hpp"
#include "iatfp/iat.hpp"
#include "iatfp/pcap.hpp"
#include "iatfp/render.hpp"
#include "iatfp/simulate.hpp"
#include "iatfp/train.hpp"

namespace py = pybind11;
using namespace iatfp;

namespace {

using ByteImage = py::array_t<uint8_t, py::array::c_style | py::array::forcecast>;

render::FingerprintImage image_from_array(const ByteImage& arr) {
    if (arr.ndim() != 3 || arr.shape(2) != 3) {
        throw py::value_error("image must be an (H, W, 3) uint8 array");
    }
    render::FingerprintImage img;
    img.height = static_cast<int>(arr.shape(0));
    img.width = static_cast<int>(arr.shape(1));
    img.pixels.assign(arr.data(), arr.data() + arr.size());
    return img;
}

py::array_t<uint8_t> image_to_array(const render::FingerprintImage& img) {
    py::array_t<uint8_t> arr({img.height, img.width, 3});
    std::memcpy(arr.mutable_data(), img.pixels.data(), img.pixels.size());
    return arr;
}

render::PlotStyle make_style(int width, int height, int margin,
                             const std::string& y_scale, double log_min,
                             double log_max, double autoscale_pad) {
    render::PlotStyle s;
    s.width = width;
    s.height = height;
    s.margin = margin;
    s.y_scale = render::y_scale_from_string(y_scale);
    s.log_min = log_min;
    s.log_max = log_max;
    s.autoscale_pad = autoscale_pad;
    s.validate();
    return s;
}

iat::IatWindow window_from_values(const py::array_t<double>& values) {
    iat::IatWindow w;
    w.values.assign(values.data(), values.data() + values.size());
    return w;
}

sim::DeviceProfile profile_from_dict(const py::dict& d) {
    sim::DeviceProfile p;
    for (const auto& item : d) {
        const std::string key = py::cast<std::string>(item.first);
        if (key == "name") {
            p.name = py::cast<std::string>(item.second);
        } else if (key == "mac") {
            const auto mac = pcap::mac_from_string(py::cast<std::string>(item.second));
            if (!mac) {
                throw py::value_error("mac must look like aa:bb:cc:dd:ee:ff");
            }
            p.mac = *mac;
        } else if (key == "intra_burst_mean") {
            p.intra_burst_mean = py::cast<double>(item.second);
        } else if (key == "inter_burst_mean") {
            p.inter_burst_mean = py::cast<double>(item.second);
        } else if (key == "burst_length_mean") {
            p.burst_length_mean = py::cast<double>(item.second);
        } else if (key == "jitter_cv") {
            p.jitter_cv = py::cast<double>(item.second);
        } else if (key == "clock_quantum") {
            p.clock_quantum = py::cast<double>(item.second);
        } else if (key == "seed") {
            p.seed = py::cast<uint64_t>(item.second);
        } else {
            throw py::value_error("unknown profile key '" + key + "'");
        }
    }
    p.validate();
    return p;
}

py::dict profile_to_dict(const sim::DeviceProfile& p) {
    py::dict d;
    d["name"] = p.name;
    d["mac"] = pcap::mac_to_string(p.mac);
    d["intra_burst_mean"] = p.intra_burst_mean;
    d["inter_burst_mean"] = p.inter_burst_mean;
    d["burst_length_mean"] = p.burst_length_mean;
    d["jitter_cv"] = p.jitter_cv;
    d["clock_quantum"] = p.clock_quantum;
    d["seed"] = p.seed;
    return d;
}

struct PyModel {
    nn::SavedModel saved;

    double predict(const ByteImage& arr) const {
        const auto img = image_from_array(arr);
        return nn::model_forward(train::image_tensor(img), saved.params,
                                 nn::Mode::eval);
    }
};

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "device fingerprinting from packet inter-arrival times";

    m.def(
        "ingest",
        [](const std::string& pcap_path, const std::string& filter,
           size_t window_size, size_t stride) {
            const auto model = pcap::filter_model_from_string(filter);
            if (!model) {
                throw py::value_error(
                    "filter must be model2, model3, model4, or all");
            }
            const auto file = pcap::read_file(pcap_path);
            const auto kept = pcap::apply_filter(file.body.records, *model);
            const auto windows = iat::windows_from_records(kept, window_size, stride);
            py::list out;
            for (const auto& w : windows) {
                py::array_t<double> values(static_cast<py::ssize_t>(w.values.size()));
                std::memcpy(values.mutable_data(), w.values.data(),
                            w.values.size() * sizeof(double));
                out.append(py::make_tuple(w.device.to_string(), w.window_index,
                                          values));
            }
            return out;
        },
        py::arg("pcap_path"), py::arg("filter"), py::arg("window_size") = 100,
        py::arg("stride") = 0,
        "Parse a pcap and return (device, window_index, values) tuples.");

    m.def(
        "rasterize",
        [](const py::array_t<double>& values, int width, int height, int margin,
           const std::string& y_scale, double log_min, double log_max,
           double autoscale_pad) {
            const auto style = make_style(width, height, margin, y_scale, log_min,
                                          log_max, autoscale_pad);
            return image_to_array(render::rasterize(window_from_values(values), style));
        },
        py::arg("values"), py::arg("width") = 150, py::arg("height") = 150,
        py::arg("margin") = 4, py::arg("y_scale") = "linear_autoscale",
        py::arg("log_min") = 1e-6, py::arg("log_max") = 10.0,
        py::arg("autoscale_pad") = 0.05,
        "Render an IAT window to an (H, W, 3) uint8 fingerprint image.");

    m.def(
        "hflip",
        [](const ByteImage& img) { return image_to_array(augment::hflip(image_from_array(img))); },
        py::arg("image"), "Mirror an image about the vertical axis.");

    m.def(
        "augment_image",
        [](const ByteImage& img, double shear_range, double zoom_range,
           bool horizontal_flip, uint64_t seed, uint64_t epoch,
           uint64_t sample_index) {
            augment::AugmentParams params;
            params.shear_range = shear_range;
            params.zoom_range = zoom_range;
            params.horizontal_flip = horizontal_flip;
            params.seed = seed;
            return image_to_array(augment::augment_image(image_from_array(img), params,
                                                         epoch, sample_index));
        },
        py::arg("image"), py::arg("shear_range") = 0.2, py::arg("zoom_range") = 0.2,
        py::arg("horizontal_flip") = true, py::arg("seed") = 0, py::arg("epoch") = 1,
        py::arg("sample_index") = 0,
        "Apply one seeded draw of the training augmentation.");

    m.def(
        "sample_iats",
        [](const py::dict& profile, size_t n) {
            const auto iats = sim::sample_iats(profile_from_dict(profile), n);
            py::array_t<double> out(static_cast<py::ssize_t>(iats.size()));
            std::memcpy(out.mutable_data(), iats.data(), iats.size() * sizeof(double));
            return out;
        },
        py::arg("profile"), py::arg("n"),
        "Draw n inter-arrival times from a device profile.");

    m.def(
        "generate_pcap",
        [](const std::vector<py::dict>& profiles, size_t packets_per_device,
           const std::string& path) {
            std::vector<sim::DeviceProfile> ps;
            ps.reserve(profiles.size());
            for (const auto& d : profiles) {
                ps.push_back(profile_from_dict(d));
            }
            sim::generate_pcap(ps, packets_per_device, path);
        },
        py::arg("profiles"), py::arg("packets_per_device"), py::arg("path"),
        "Write a synthetic capture for the given device profiles.");

    m.def("default_profiles", [] {
        py::list out;
        out.append(profile_to_dict(sim::default_profile_a()));
        out.append(profile_to_dict(sim::default_profile_b()));
        return out;
    });

    m.def("train_count", &iat::train_count, py::arg("ratio"), py::arg("n"),
          "Round-half-up(ratio * n), the per-device training-set size.");

    m.def(
        "run_cli",
        [](const std::vector<std::string>& args) {
            std::vector<std::string> argv_store;
            argv_store.reserve(args.size() + 1);
            argv_store.push_back("iatfp");
            argv_store.insert(argv_store.end(), args.begin(), args.end());
            std::vector<const char*> argv;
            argv.reserve(argv_store.size());
            for (const auto& a : argv_store) {
                argv.push_back(a.c_str());
            }
            return cli::run(static_cast<int>(argv.size()), argv.data());
        },
        py::arg("args"), "Invoke the command-line tool in-process; returns its exit code.");

    py::class_<PyModel>(m, "Model")
        .def_static(
            "load",
            [](const std::string& path) { return PyModel{nn::load_model(path)}; },
            py::arg("path"))
        .def("predict", &PyModel::predict, py::arg("image"),
             "Probability that the image belongs to class 1.")
        .def_property_readonly("loss_kind", [](const PyModel& self) {
            return nn::to_string(self.saved.loss_kind);
        });
}
