#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace tinygaze {

// 4x4 homogeneous rigid transform, row-major.
struct Transform4 {
    std::array<double, 16> m{1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1};

    double& at(int r, int c) { return m[4 * r + c]; }
    double at(int r, int c) const { return m[4 * r + c]; }

    static Transform4 identity() { return Transform4{}; }

    bool operator==(const Transform4&) const = default;
};

enum class GestureClass : int { Vertical = 0, Horizontal = 1, L0 = 2, L270 = 3, Z0 = 4 };
inline constexpr int kNumGestures = 5;

enum class Stage : int { Follow = 0, Fixed = 1, IRecall = 2, Recall = 3 };
inline constexpr int kNumStages = 4;

const char* gesture_name(GestureClass g);
const char* gesture_token(GestureClass g);   // V, H, L0, L270, Z0
std::optional<GestureClass> gesture_from_token(const std::string& tok);

const char* stage_name(Stage s);
const char* stage_token(Stage s);            // FOLLOW, FIXED, IRECALL, RECALL
std::optional<Stage> stage_from_token(const std::string& tok);

// One synchronized frame from the sensing stream.
struct FrameSample {
    double t = 0.0;  // seconds
    Transform4 head;
    Transform4 left_eye;
    Transform4 right_eye;
};

struct GestureTrial {
    std::string participant_id;
    GestureClass gesture = GestureClass::Vertical;
    Stage stage = Stage::Follow;
    int repetition = 1;  // >= 1
    std::vector<FrameSample> frames;
};

enum class Modality : int { Head = 0, Eyes = 1, LeftEye = 2, RightEye = 3, EyeHead = 4 };

int modality_dim(Modality m);  // 16 / 32 / 16 / 16 / 48
const char* modality_name(Modality m);
std::optional<Modality> modality_from_name(const std::string& name);

// Row-major flattening: out[4r + c] = m[r][c].
std::array<double, 16> flatten_transform(const Transform4& t);
Transform4 unflatten_transform(const std::array<double, 16>& v);

struct TransformValidation {
    double homogeneous_deviation = 0.0;  // max |row3 - (0,0,0,1)|
    double orthonormality_residual = 0.0;  // max |(R^T R - I)_ij|
    bool pass = true;
};

// Never throws; reports residuals against tol.
TransformValidation validate_transform(const Transform4& t, double tol);

}  // namespace tinygaze
