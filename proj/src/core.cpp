#include "tinygaze/core.hpp"

#include <algorithm>

namespace tinygaze {

const char* gesture_name(GestureClass g) {
    switch (g) {
        case GestureClass::Vertical: return "Vertical";
        case GestureClass::Horizontal: return "Horizontal";
        case GestureClass::L0: return "L0";
        case GestureClass::L270: return "L270";
        case GestureClass::Z0: return "Z0";
    }
    return "?";
}

const char* gesture_token(GestureClass g) {
    switch (g) {
        case GestureClass::Vertical: return "V";
        case GestureClass::Horizontal: return "H";
        case GestureClass::L0: return "L0";
        case GestureClass::L270: return "L270";
        case GestureClass::Z0: return "Z0";
    }
    return "?";
}

std::optional<GestureClass> gesture_from_token(const std::string& tok) {
    if (tok == "V") return GestureClass::Vertical;
    if (tok == "H") return GestureClass::Horizontal;
    if (tok == "L0") return GestureClass::L0;
    if (tok == "L270") return GestureClass::L270;
    if (tok == "Z0") return GestureClass::Z0;
    return std::nullopt;
}

const char* stage_name(Stage s) {
    switch (s) {
        case Stage::Follow: return "Follow";
        case Stage::Fixed: return "Fixed";
        case Stage::IRecall: return "IRecall";
        case Stage::Recall: return "Recall";
    }
    return "?";
}

const char* stage_token(Stage s) {
    switch (s) {
        case Stage::Follow: return "FOLLOW";
        case Stage::Fixed: return "FIXED";
        case Stage::IRecall: return "IRECALL";
        case Stage::Recall: return "RECALL";
    }
    return "?";
}

std::optional<Stage> stage_from_token(const std::string& tok) {
    if (tok == "FOLLOW") return Stage::Follow;
    if (tok == "FIXED") return Stage::Fixed;
    if (tok == "IRECALL") return Stage::IRecall;
    if (tok == "RECALL") return Stage::Recall;
    return std::nullopt;
}

int modality_dim(Modality m) {
    switch (m) {
        case Modality::Head: return 16;
        case Modality::Eyes: return 32;
        case Modality::LeftEye: return 16;
        case Modality::RightEye: return 16;
        case Modality::EyeHead: return 48;
    }
    return 0;
}

const char* modality_name(Modality m) {
    switch (m) {
        case Modality::Head: return "head";
        case Modality::Eyes: return "eyes";
        case Modality::LeftEye: return "left_eye";
        case Modality::RightEye: return "right_eye";
        case Modality::EyeHead: return "eye_head";
    }
    return "?";
}

std::optional<Modality> modality_from_name(const std::string& name) {
    if (name == "head") return Modality::Head;
    if (name == "eyes") return Modality::Eyes;
    if (name == "left_eye") return Modality::LeftEye;
    if (name == "right_eye") return Modality::RightEye;
    if (name == "eye_head") return Modality::EyeHead;
    return std::nullopt;
}

std::array<double, 16> flatten_transform(const Transform4& t) {
    return t.m;
}

Transform4 unflatten_transform(const std::array<double, 16>& v) {
    Transform4 t;
    t.m = v;
    return t;
}

TransformValidation validate_transform(const Transform4& t, double tol) {
    TransformValidation rep;
    const double hom[4] = {0, 0, 0, 1};
    for (int c = 0; c < 4; ++c)
        rep.homogeneous_deviation = std::max(rep.homogeneous_deviation, std::abs(t.at(3, c) - hom[c]));
    // R^T R - I on the 3x3 rotation block
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
            double dot = 0;
            for (int k = 0; k < 3; ++k) dot += t.at(k, i) * t.at(k, j);
            double expect = (i == j) ? 1.0 : 0.0;
            rep.orthonormality_residual = std::max(rep.orthonormality_residual, std::abs(dot - expect));
        }
    }
    rep.pass = rep.homogeneous_deviation <= tol && rep.orthonormality_residual <= tol;
    return rep;
}

}  // namespace tinygaze
