#include "hoi/planner.hpp"

#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <thread>

#include "hoi/collide.hpp"
#include "hoi/pathfind.hpp"
#include <httplib.h>
#include <json.hpp>

namespace hoi {

using nlohmann::json;

PlannerConfig PlannerConfig::from_env() {
    PlannerConfig c;
    if (const char* v = std::getenv("PLANNER_ENDPOINT")) c.endpoint = v;
    if (const char* v = std::getenv("PLANNER_MODEL")) c.model = v;
    if (const char* v = std::getenv("PLANNER_API_KEY")) c.api_key = v;
    return c;
}

// ---------------------------------------------------------------------------
// System prompt

namespace {

const char* kPromptHeader = R"PROMPT(You are a scientific AI, specialized in generating a sequence of steps and Python code for human to interact in 3D scene, along with the task instructions and the initial state information of the human and all objects in the environment:

You must remember that this conversation is a monologue, and that you are in control. I am not able to assist you with any questions, and you must output the plan and code yourself by making use of the common sense, general knowledge, and available information.

PLANNING:
## 1. COORDINATE SYSTEM

The 3D environment uses the following coordinate frame:
- **x-axis**: Horizontal, increasing to the right
- **y-axis**: Depth, increasing away from the observer
- **z-axis**: Vertical, increasing upward
- All positions are in meters, centered on the object
- All orientations are in radians

## 2. ENVIRONMENT STATE

The `<CURRENT ENVIRONMENT STATE>` contains:
- Position, orientation, and dimensions of all objects and the human
- Each object includes width (x), length (y), and height (z)
- Human body volume is: **0.5m (width) x 0.4m (depth) x 1.7m (height)**

## 3. SUCCESS AND FAILURE CONDITIONS

- **Success Criteria**:
  - Object position is within **±0.05m**
  - Object orientation is within **±0.1 radians**

- **Failure Handling**:
  - On any deviation or collision, generate a **new plan** from the most recent successful state
  - Replanned steps must include **extra clearance** and **more intermediate waypoints**

## 4. COLLISION AVOIDANCE

### 4.1 Object Volume and Safety Margins

- All entities (human and objects) are treated as **solid 3D volumes**
- Add a **0.2m safety envelope** around each object and the human
- Always check for:
  - Inter-object collisions
  - Human-object intersections
  - Volume-based overlap across the entire movement

### 4.2 Swept Volume Validation

- All movements are defined as **waypoints connected by smooth paths**
- For each segment between waypoints:
  - Compute the **swept volume** of both human and manipulated object
  - Ensure **no part of this volume intersects** any obstacle or safety buffer
  - Avoid narrow spaces and sharp corners unless sufficient clearance is confirmed

## 5. TRAJECTORY PLANNING RULES

- Prefer **smooth, curved paths** resembling natural human motion
- Use Bezier curves or splines between waypoints
- Each waypoint must be:
  - A valid 3D point
  - Verified as part of a collision-free segment
- Add **intermediate waypoints** near tight spaces or complex objects

## 6. INTERACTION LOGIC

### 6.1 Two-Step Manipulation Model

For every object task:

1. **Approach Step** (only if human is not within 1m reach):
   - Move the human near the object (>=0.2m distance from object boundary)
   - Ensure full-body clearance at every waypoint and segment
   - The human velocity in average is 1.2 m/s, here we all use fps=30. Make sure the frame number and waypoints are reasonable (don't be too large or too small).

2. **Manipulation Step** (if object is not already in correct pose):
   - Grasp, lift, move, and place the object in one step
   - Provide **separate waypoints** for the human and the object
   - Include object dimensions and rotation during motion
   - The human velocity in average is 1.2 m/s, here we all use fps=30. Make sure the frame number and waypoints are reasonable (don't be too large or too small).

### 6.2 Skip Unnecessary Actions

- If the human is already in position, **skip the approach**
- If the object is already in place, **skip the manipulation**
- Do **not output steps that don't need execution**

CODE GENERATER:
AVAILABLE FUNCTIONS:
You are, however, able to call any of the following Python functions, if required, as often as you want:
    1. generate_motion(control_joints: list[str], control_points: list[list[list[float]]], text: str, number_frames: int, task_index: int) -> None: This function will generate the human motion based on the control joints, control points, text, number of frames and the task index, and will also not return anything. It takes list control_joints of n elements, list control_points of n sublists of float, one string text, one int num_frames and one int task_index value as input.
    2. generate_interaction(control_joints: list[str], control_points: list[list[list[float]]], text: str, number_frames: int, task_index: int, object_name: list[str], object_points: list[list[list[float]]]) -> None: This function will generate the human and object interaction based on the control joints, control points, text, number of frames, the task index, list of object name and object key points, and will also not return anything. It takes list control_joints of n elements, list control_points of n sublists of float, one string text, one int num_frames and one int task_index value, one string object_name and one list of sublists object_points as input.
    3. task_completed() -> None: Call this function only when the task has been completed. This function will also not return anything. If there is **any error in the code or planning consecutively for five times**, **then also call this function**.
    When calling any of the functions, make sure to stop generation after each function call and wait for it to be executed, before calling another function and continuing with your plans.

CODE GENERATION:
When generating the code for the trajectory, do the following:
    1. When mentioning the functions, specify the required parameters and clearly define them in the same code block before passing it to code executor. For generate_motion, define the control_joints, control_points, text, number_frames and task_index lists prior to it.
    2. Note that control_joints specifies the minimum relevant human joints according to this step and should be a subset of ['pelvis','left_hand','right_hand']. Do not put object name in this list!
    3. control_points specify the detailed list of waypoints and the corresponding frame index for each control joints. For example, control_joints = ['pelvis', 'left_hand'], control_points = [[[t1,x1,y1,z1],[t2,x2,y2,z2]],[[t3,x3,y3,z3]]] where [[t1,x1,y1,z1],[t2,x2,y2,z2]] specify the frame index and the position for pelvis, and [[t3,x3,y3,z3]] is for left hand. Note that 0 < t1, t2, t3 < number_frames.
    4. text is the description for this step.
    5. number_frames specify the total number of frames for this step.
    6. object_name is list of the name given in the text. For example, ["large box"] or ["small box", "large box"].
    7. object_points specify the detaile key points for object, such as [[[t1,x1,y1,z1],[t2,x2,y2,z2]],[[t3,x3,y3,z3]]]
    8. *Do not generate the code all in one go for all the steps; instead, generate it step by step*. After generating, provide this step-level code to the code esxecutor and wait for the reply. *Pass the response to the planner*. If the generated code is incorrect and the code executor encounters an error during execution, *correct it and then submit it to the code executor again*.
    9. Use generate_motion for human motion and generate_interaction for both human and object interaction.
    10. Mark any code clearly with the tags: ```python ```

Code FORMAT:
    1. Generate well-formatted Python code in markdown syntax.
    2. The code must follow Python's standard formatting (PEP 8) with proper indentation and line breaks.
    3. Include explanations before the code to clarify what it does.
    4. Use clear variable names and comments to enhance readability.
    5. Ensure the generated code is executable.
    6. Do not output code in a single line.

EXAMPLE OUTPUT:
    Explanation:
        The following code moves a human towards the floorlamp over 60 frames (2 seconds at 30 FPS).
    Code:
```python
control_joints = ['pelvis', 'right_hand']
control_points = [
    [  # Pelvis movement
        [0, 5.0427, -3.9485, 0.8897],  # Start position
        [60, 4.8350, -3.8000, 0.8897]  # End position
    ],
    [  # Right hand remains in place
        [0, 4.8806, -3.7075, 0.9033],
        [60, 4.8806, -3.7075, 0.9033]
    ]
]
text = "The human walks towards the floorlamp."
number_frames = 60
task_index = 1
generate_motion(control_joints, control_points, text, number_frames, task_index)
```

Another 2 Examples with object interaction:
Examples1: One object interaction
```python
control_joints = ['pelvis']
control_points = [
    [   # Pelvis trajectory: approach, grasp, and carry in one motion
        [0, 3.176, -0.429, 0.925],      # Start: current position
        [40, 3.05, -1.28, 0.925],       # Arrive & grasp trashcan
        [80, 3.60, -1.75, 0.925],       # End: put down trashcan
    ]
]
text = (
    "The human moves trashcan to around sofa, avoiding obstacles along the way."
)
number_frames = 80
task_index = 1
object_name = ["trashcan"]
object_points = [
    [   # Trashcan keypoints: moves with the human after grasped
        [40, 2.899, -1.069, 0.148],     # Pickup (grasped at this frame)
        [80, 3.55, -1.65, 0.148],
    ]
]
model.generate_human_object(control_joints, control_points, text, number_frames, task_index, object_name, object_points)
```

Examples2: 2 objects interaction at the same time
```python
control_joints = ['pelvis']
control_points = [
    [   # Pelvis trajectory: approach, grasp, and carry in one motion
        [0, 3.176, -0.429, 0.925],      # Start: current position
        [40, 3.05, -1.28, 0.925],       # Arrive & grasp trashcan
        [80, 3.60, -1.75, 0.925],       # End: put down trashcan
    ]
]
text = (
    "The human moves trashcan and smallbox to around sofa at the same time, avoiding obstacles along the way."
)
number_frames = 80
task_index = 1
object_name = ["trashcan", "smallbox"]
object_points = [
    [   # Trashcan keypoints: moves with the human after grasped
        [40, 2.899, -1.069, 0.148],     # Pickup (grasped at this frame)
        [80, 3.55, -1.65, 0.148],
    ],
    [   # Smallbox keypoints: moves with the human after grasped
        [40, 3.012, -0.878, 0.148],     # Pickup (grasped at this frame)
        [80, 3.65, -1.95, 0.148],
    ]
]
model.generate_human_object(control_joints, control_points, text, number_frames, task_index, object_name, object_points)
```

**Ensure proper indentation and include line breaks**.
**Generate Codes only for one step each time, and pass to executer**.
**Remember: number_frames should be larger or equal to the largest frame_id**.

Once all steps have been successfully completed, you **must** call the `task_completed()` function by:
```python
task_completed()
```
**Important: Only call this function after all execution is fully finished. Do not call it early, even if some partial results are available.**
**The completed() function should be a standalone message.**
)PROMPT";

std::string human_state_block(const HumanState& h) {
    std::ostringstream out;
    out << "pelvis position: " << format_vec(h.pelvis) << "\n"
        << "left hand position: " << format_vec(h.left_hand) << "\n"
        << "right hand position: " << format_vec(h.right_hand) << "\n"
        << "orientation: "
        << format_vec({h.orientation.rx, h.orientation.ry, h.orientation.rz})
        << "\n";
    return out.str();
}

std::string objects_only_block(const SceneState& scene) {
    std::ostringstream out;
    for (const auto& o : scene.objects) {
        out << "***" << o.name << "***:\n"
            << "position: " << format_vec(o.box.center) << "\n"
            << "orientation: "
            << format_vec({o.box.orientation.rx, o.box.orientation.ry,
                           o.box.orientation.rz})
            << "\n"
            << "sizes: " << format_vec(o.box.sizes) << "\n";
    }
    return out.str();
}

}  // namespace

std::string build_system_prompt(const SceneState& scene, const std::string& instruction) {
    if (instruction.empty())
        throw std::invalid_argument("task instruction must not be empty");
    scene.validate();
    std::ostringstream out;
    out << kPromptHeader << "\n";
    out << "Your task is to guide the human to excute task in the environment "
           "according the text description \""
        << instruction << "\".\n\n";
    out << "The human position and orientation state is:\n\""
        << human_state_block(scene.human) << "\"\n\n";
    out << "The position, orientation and size of all objects in the "
           "environment are as follows:\n<CURRENT ENVIRONMENT STATE>:\n\""
        << objects_only_block(scene) << "\"\n";
    return out.str();
}

// ---------------------------------------------------------------------------
// Restricted literal parser

namespace {

struct PyValue {
    enum Kind { Num, Str, List } kind = Num;
    double num = 0.0;
    std::string str;
    std::vector<PyValue> list;
};

struct Token {
    enum Kind { Ident, Number, String, Punct, End } kind = End;
    std::string text;
    double num = 0.0;
    int line = 0;
};

struct ParseFail : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::vector<Token> tokenize(const std::string& code, int first_line) {
    std::vector<Token> out;
    int line = first_line;
    size_t i = 0, n = code.size();
    auto fail = [&](const std::string& what) {
        throw ParseFail("line " + std::to_string(line) + ": " + what);
    };
    while (i < n) {
        char c = code[i];
        if (c == '\n') { ++line; ++i; continue; }
        if (std::isspace(static_cast<unsigned char>(c))) { ++i; continue; }
        if (c == '#') {
            while (i < n && code[i] != '\n') ++i;
            continue;
        }
        if (c == '\\') {  // stray line-break markers some planners emit
            if (i + 1 < n && code[i + 1] == 'n') i += 2;
            else ++i;
            continue;
        }
        if (c == '\'' || c == '"') {
            char quote = c;
            std::string s;
            ++i;
            while (true) {
                if (i >= n || code[i] == '\n') fail("unterminated string literal");
                if (code[i] == quote) { ++i; break; }
                if (code[i] == '\\' && i + 1 < n) {
                    char e = code[i + 1];
                    if (e == 'n') s += '\n';
                    else if (e == 't') s += '\t';
                    else s += e;
                    i += 2;
                    continue;
                }
                s += code[i++];
            }
            out.push_back({Token::String, s, 0.0, line});
            continue;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) ||
            (c == '.' && i + 1 < n && std::isdigit(static_cast<unsigned char>(code[i + 1])))) {
            size_t start = i;
            while (i < n && (std::isdigit(static_cast<unsigned char>(code[i])) ||
                             code[i] == '.' || code[i] == 'e' || code[i] == 'E' ||
                             ((code[i] == '+' || code[i] == '-') &&
                              (code[i - 1] == 'e' || code[i - 1] == 'E'))))
                ++i;
            std::string t = code.substr(start, i - start);
            try {
                out.push_back({Token::Number, t, std::stod(t), line});
            } catch (const std::exception&) {
                fail("malformed number '" + t + "'");
            }
            continue;
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            size_t start = i;
            while (i < n && (std::isalnum(static_cast<unsigned char>(code[i])) ||
                             code[i] == '_'))
                ++i;
            out.push_back({Token::Ident, code.substr(start, i - start), 0.0, line});
            continue;
        }
        if (std::string("[](),=.-+").find(c) != std::string::npos) {
            out.push_back({Token::Punct, std::string(1, c), 0.0, line});
            ++i;
            continue;
        }
        fail(std::string("unexpected character '") + c + "'");
    }
    out.push_back({Token::End, "", 0.0, line});
    return out;
}

class BlockParser {
  public:
    explicit BlockParser(std::vector<Token> toks) : toks_(std::move(toks)) {}

    AgentCommand parse() {
        std::optional<AgentCommand> cmd;
        while (peek().kind != Token::End) {
            if (peek().kind != Token::Ident)
                fail("expected an assignment or a function call");
            if (is_call_ahead()) {
                if (cmd) fail("only one function call per code block is allowed");
                cmd = parse_call();
                continue;
            }
            parse_assignment();
        }
        if (!cmd) fail("code block contains no function call");
        return *cmd;
    }

  private:
    std::vector<Token> toks_;
    size_t pos_ = 0;
    std::map<std::string, PyValue> env_;

    const Token& peek(size_t ahead = 0) const {
        return toks_[std::min(pos_ + ahead, toks_.size() - 1)];
    }
    const Token& take() { return toks_[std::min(pos_++, toks_.size() - 1)]; }
    [[noreturn]] void fail(const std::string& what) const {
        throw ParseFail("line " + std::to_string(peek().line) + ": " + what);
    }
    void expect_punct(const std::string& p) {
        if (peek().kind != Token::Punct || peek().text != p)
            fail("expected '" + p + "'");
        take();
    }

    bool is_call_ahead() const {
        // ident '(' or 'model' '.' ident '('
        if (peek(1).kind == Token::Punct && peek(1).text == "(") return true;
        return peek(1).kind == Token::Punct && peek(1).text == "." &&
               peek(2).kind == Token::Ident && peek(3).kind == Token::Punct &&
               peek(3).text == "(";
    }

    PyValue parse_literal() {
        const Token& t = peek();
        if (t.kind == Token::Punct && (t.text == "-" || t.text == "+")) {
            bool neg = t.text == "-";
            take();
            if (peek().kind != Token::Number) fail("expected a number after sign");
            PyValue v;
            v.kind = PyValue::Num;
            v.num = take().num;
            if (neg) v.num = -v.num;
            return v;
        }
        if (t.kind == Token::Number) {
            PyValue v;
            v.kind = PyValue::Num;
            v.num = take().num;
            return v;
        }
        if (t.kind == Token::String) {
            PyValue v;
            v.kind = PyValue::Str;
            v.str = take().text;
            // implicit concatenation of adjacent string literals
            while (peek().kind == Token::String) v.str += take().text;
            return v;
        }
        if (t.kind == Token::Punct && t.text == "(") {
            take();
            PyValue v = parse_literal();
            if (v.kind == PyValue::Str)
                while (peek().kind == Token::String) v.str += take().text;
            expect_punct(")");
            return v;
        }
        if (t.kind == Token::Punct && t.text == "[") {
            take();
            PyValue v;
            v.kind = PyValue::List;
            while (!(peek().kind == Token::Punct && peek().text == "]")) {
                v.list.push_back(parse_literal());
                if (peek().kind == Token::Punct && peek().text == ",") take();
                else break;
            }
            expect_punct("]");
            return v;
        }
        if (t.kind == Token::Ident)
            fail("only list, number, and string literals are allowed here; '" +
                 t.text + "' is not a literal");
        fail("expected a literal");
    }

    void parse_assignment() {
        std::string name = take().text;
        expect_punct("=");
        env_[name] = parse_literal();
    }

    PyValue arg_value() {
        if (peek().kind == Token::Ident) {
            std::string name = take().text;
            auto it = env_.find(name);
            if (it == env_.end()) fail("undefined variable '" + name + "'");
            return it->second;
        }
        return parse_literal();
    }

    static std::vector<std::string> as_str_list(const PyValue& v,
                                                const std::string& what) {
        if (v.kind != PyValue::List)
            throw ParseFail(what + " must be a list of strings");
        std::vector<std::string> out;
        for (const auto& e : v.list) {
            if (e.kind != PyValue::Str)
                throw ParseFail(what + " must contain only strings");
            out.push_back(e.str);
        }
        return out;
    }

    static std::vector<ControlTrack> as_tracks(const PyValue& v,
                                               const std::string& what) {
        if (v.kind != PyValue::List)
            throw ParseFail(what + " must be a list of waypoint lists");
        std::vector<ControlTrack> out;
        for (const auto& track_v : v.list) {
            if (track_v.kind != PyValue::List)
                throw ParseFail(what + " entries must be lists of [t,x,y,z] rows");
            ControlTrack track;
            bool have_z = false;
            double z = 0.0;
            for (const auto& row_v : track_v.list) {
                if (row_v.kind != PyValue::List ||
                    (row_v.list.size() != 3 && row_v.list.size() != 4))
                    throw ParseFail(what + " rows must be [t,x,y] or [t,x,y,z]");
                double nums[4] = {0, 0, 0, 0};
                for (size_t i = 0; i < row_v.list.size(); ++i) {
                    if (row_v.list[i].kind != PyValue::Num)
                        throw ParseFail(what + " rows must contain numbers only");
                    nums[i] = row_v.list[i].num;
                }
                double frame_d = nums[0];
                if (std::fabs(frame_d - std::round(frame_d)) > 1e-9)
                    throw ParseFail(what + " frame indices must be integers");
                Waypoint w;
                w.frame = static_cast<int>(std::llround(frame_d));
                if (row_v.list.size() == 4) {
                    z = nums[3];
                    have_z = true;
                } else if (!have_z) {
                    throw ParseFail(what + " first row must carry a z coordinate");
                }
                w.position = {nums[1], nums[2], z};
                track.waypoints.push_back(w);
            }
            out.push_back(std::move(track));
        }
        return out;
    }

    static int as_int(const PyValue& v, const std::string& what) {
        if (v.kind != PyValue::Num ||
            std::fabs(v.num - std::round(v.num)) > 1e-9)
            throw ParseFail(what + " must be an integer");
        return static_cast<int>(std::llround(v.num));
    }

    static std::string as_str(const PyValue& v, const std::string& what) {
        if (v.kind != PyValue::Str) throw ParseFail(what + " must be a string");
        return v.str;
    }

    AgentCommand parse_call() {
        std::string callee = take().text;
        if (callee == "model") {
            expect_punct(".");
            callee = "model." + take().text;
        }
        expect_punct("(");
        std::vector<PyValue> args;
        while (!(peek().kind == Token::Punct && peek().text == ")")) {
            args.push_back(arg_value());
            if (peek().kind == Token::Punct && peek().text == ",") take();
            else break;
        }
        expect_punct(")");

        AgentCommand cmd;
        if (callee == "task_completed") {
            if (!args.empty()) fail("task_completed takes no arguments");
            cmd.kind = CommandKind::TaskCompleted;
            return cmd;
        }
        bool interaction = callee == "generate_interaction" ||
                           callee == "model.generate_human_object";
        if (!interaction && callee != "generate_motion")
            fail("unknown function '" + callee +
                 "'; expected generate_motion, generate_interaction, or "
                 "task_completed");
        size_t expected = interaction ? 7 : 5;
        if (args.size() != expected)
            fail(callee + " expects " + std::to_string(expected) + " arguments");
        cmd.kind = interaction ? CommandKind::GenerateInteraction
                               : CommandKind::GenerateMotion;
        cmd.control_joints = as_str_list(args[0], "control_joints");
        cmd.control_points = as_tracks(args[1], "control_points");
        cmd.text = as_str(args[2], "text");
        cmd.number_frames = as_int(args[3], "number_frames");
        cmd.task_index = as_int(args[4], "task_index");
        if (interaction) {
            cmd.object_name = as_str_list(args[5], "object_name");
            cmd.object_points = as_tracks(args[6], "object_points");
        }
        return cmd;
    }
};

std::vector<std::pair<std::string, int>> extract_code_blocks(const std::string& text) {
    std::vector<std::pair<std::string, int>> blocks;  // content, first line
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    bool open = false;
    std::string current;
    int current_start = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string trimmed = line;
        size_t a = trimmed.find_first_not_of(" \t");
        trimmed = a == std::string::npos ? "" : trimmed.substr(a);
        if (trimmed.rfind("```", 0) == 0) {
            if (open) {
                blocks.emplace_back(current, current_start);
                current.clear();
            } else {
                current_start = lineno + 1;
            }
            open = !open;
            continue;
        }
        if (open) current += line + "\n";
    }
    return blocks;
}

}  // namespace

ParseResult parse_commands(const std::string& message) {
    ParseResult result;
    auto blocks = extract_code_blocks(message);
    for (const auto& [code, first_line] : blocks) {
        try {
            BlockParser parser(tokenize(code, first_line));
            result.commands.push_back(parser.parse());
        } catch (const ParseFail& e) {
            result.commands.clear();
            result.error = std::string("code parse error: ") + e.what();
            return result;
        } catch (const std::exception& e) {
            result.commands.clear();
            result.error = std::string("code parse error: ") + e.what();
            return result;
        }
    }
    return result;
}

// ---------------------------------------------------------------------------
// Command serialization

namespace {

std::string shortest_repr(double v) {
    char buf[64];
    for (int prec = 1; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
        if (std::strtod(buf, nullptr) == v) break;
    }
    std::string s = buf;
    if (s.find('.') == std::string::npos && s.find('e') == std::string::npos &&
        s.find("inf") == std::string::npos && s.find("nan") == std::string::npos)
        s += ".0";
    return s;
}

std::string quote_py(const std::string& s) {
    std::string out = "\"";
    for (char c : s) {
        if (c == '"' || c == '\\') out += '\\';
        if (c == '\n') { out += "\\n"; continue; }
        out += c;
    }
    out += '"';
    return out;
}

std::string tracks_literal(const std::vector<ControlTrack>& tracks) {
    std::ostringstream out;
    out << "[\n";
    for (const auto& t : tracks) {
        out << "    [\n";
        for (const auto& w : t.waypoints)
            out << "        [" << w.frame << ", " << shortest_repr(w.position.x)
                << ", " << shortest_repr(w.position.y) << ", "
                << shortest_repr(w.position.z) << "],\n";
        out << "    ],\n";
    }
    out << "]";
    return out.str();
}

std::string str_list_literal(const std::vector<std::string>& v) {
    std::ostringstream out;
    out << "[";
    for (size_t i = 0; i < v.size(); ++i)
        out << (i ? ", " : "") << quote_py(v[i]);
    out << "]";
    return out.str();
}

}  // namespace

std::string serialize_command(const AgentCommand& cmd) {
    std::ostringstream out;
    out << "```python\n";
    if (cmd.kind == CommandKind::TaskCompleted) {
        out << "task_completed()\n```";
        return out.str();
    }
    out << "control_joints = " << str_list_literal(cmd.control_joints) << "\n";
    out << "control_points = " << tracks_literal(cmd.control_points) << "\n";
    out << "text = (\n    " << quote_py(cmd.text) << "\n)\n";
    out << "number_frames = " << cmd.number_frames << "\n";
    out << "task_index = " << cmd.task_index << "\n";
    if (cmd.kind == CommandKind::GenerateInteraction) {
        out << "object_name = " << str_list_literal(cmd.object_name) << "\n";
        out << "object_points = " << tracks_literal(cmd.object_points) << "\n";
        out << "\ngenerate_interaction(\n    control_joints,\n    control_points,\n"
               "    text,\n    number_frames,\n    task_index,\n    object_name,\n"
               "    object_points\n)\n";
    } else {
        out << "\ngenerate_motion(control_joints, control_points, text, "
               "number_frames, task_index)\n";
    }
    out << "```";
    return out.str();
}

namespace {

bool tracks_equal(const std::vector<ControlTrack>& a,
                  const std::vector<ControlTrack>& b) {
    if (a.size() != b.size()) return false;
    for (size_t i = 0; i < a.size(); ++i) {
        if (a[i].waypoints.size() != b[i].waypoints.size()) return false;
        for (size_t j = 0; j < a[i].waypoints.size(); ++j) {
            const Waypoint& x = a[i].waypoints[j];
            const Waypoint& y = b[i].waypoints[j];
            if (x.frame != y.frame || x.position.x != y.position.x ||
                x.position.y != y.position.y || x.position.z != y.position.z)
                return false;
        }
    }
    return true;
}

}  // namespace

bool operator==(const AgentCommand& a, const AgentCommand& b) {
    return a.kind == b.kind && a.control_joints == b.control_joints &&
           tracks_equal(a.control_points, b.control_points) && a.text == b.text &&
           a.number_frames == b.number_frames && a.task_index == b.task_index &&
           a.object_name == b.object_name &&
           tracks_equal(a.object_points, b.object_points);
}

// ---------------------------------------------------------------------------
// Episode log persistence

void EpisodeLog::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write episode log: " + path);
    for (const auto& e : entries) {
        json j = {{"role", e.role}, {"message", e.message}};
        out << j.dump() << "\n";
    }
    json tail = {{"outcome", outcome}};
    out << tail.dump() << "\n";
}

EpisodeLog EpisodeLog::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open episode log: " + path);
    EpisodeLog log;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        json j = json::parse(line);
        if (j.contains("outcome")) {
            log.outcome = j.at("outcome").get<std::string>();
        } else {
            log.append(j.at("role").get<std::string>(),
                       j.at("message").get<std::string>());
        }
    }
    return log;
}

// ---------------------------------------------------------------------------
// Chat-completion client

namespace {

struct ParsedUrl {
    std::string base;  // scheme://host[:port]
    std::string path;
};

ParsedUrl split_url(const std::string& url) {
    size_t scheme = url.find("://");
    if (scheme == std::string::npos)
        throw std::invalid_argument("endpoint must be an http(s) URL: " + url);
    size_t path_start = url.find('/', scheme + 3);
    if (path_start == std::string::npos) return {url, "/"};
    return {url.substr(0, path_start), url.substr(path_start)};
}

}  // namespace

std::string request_step(const PlannerConfig& config, const EpisodeLog& transcript) {
    if (config.endpoint.empty())
        throw PlannerUnavailable("no planner endpoint configured (PLANNER_ENDPOINT)");
    ParsedUrl url = split_url(config.endpoint);

    json messages = json::array();
    for (const auto& e : transcript.entries) {
        std::string role = e.role == "system" || e.role == "assistant" ? e.role : "user";
        messages.push_back({{"role", role}, {"content", e.message}});
    }
    json body = {{"model", config.model},
                 {"messages", messages},
                 {"temperature", config.temperature}};
    std::string payload = body.dump();

    httplib::Headers headers;
    if (!config.api_key.empty())
        headers.emplace("Authorization", "Bearer " + config.api_key);

    std::string last_error = "no attempt made";
    for (int attempt = 0; attempt <= config.max_retries; ++attempt) {
        if (attempt > 0)
            std::this_thread::sleep_for(std::chrono::duration<double>(
                config.backoff_base_seconds * std::pow(2.0, attempt - 1)));
        httplib::Client client(url.base);
        client.set_connection_timeout(std::chrono::duration<double>(config.timeout_seconds));
        client.set_read_timeout(std::chrono::duration<double>(config.timeout_seconds));
        auto res = client.Post(url.path, headers, payload, "application/json");
        if (!res) {
            last_error = "transport failure: " + httplib::to_string(res.error());
            continue;
        }
        if (res->status >= 200 && res->status < 300) {
            json j = json::parse(res->body);
            return j.at("choices").at(0).at("message").at("content").get<std::string>();
        }
        last_error = "HTTP " + std::to_string(res->status) + ": " + res->body;
        if (res->status < 500)
            throw std::runtime_error("planner request failed, " + last_error);
    }
    throw PlannerUnavailable("planner unavailable after " +
                             std::to_string(config.max_retries + 1) +
                             " attempts; last error: " + last_error);
}

std::string HttpPlanner::next(const EpisodeLog& transcript) {
    return request_step(config, transcript);
}

std::string ReplayPlanner::next(const EpisodeLog&) {
    if (cursor >= messages.size())
        throw PlannerUnavailable("replay transcript exhausted after " +
                                 std::to_string(messages.size()) + " messages");
    return messages[cursor++];
}

ReplayPlanner ReplayPlanner::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open transcript: " + path);
    ReplayPlanner planner;
    std::string line, current;
    bool any = false;
    while (std::getline(in, line)) {
        if (line == "<<<ASSISTANT>>>") {
            if (any) planner.messages.push_back(current);
            current.clear();
            any = true;
            continue;
        }
        current += line + "\n";
    }
    if (any) planner.messages.push_back(current);
    return planner;
}

// ---------------------------------------------------------------------------
// Episode loop

namespace {

std::string format_frame_number(int frame) {
    // Frame 0 prints as "0.0" in suggestion rows, matching the executor's
    // historical output that downstream planners were tuned on.
    return frame == 0 ? "0.0" : std::to_string(frame);
}

std::string suggestion_text(const RepairResult& repair, double z) {
    std::ostringstream out;
    out << "Here is the recommended collision-free trajectory:\n[";
    for (size_t i = 0; i < repair.track.waypoints.size(); ++i) {
        const Waypoint& w = repair.track.waypoints[i];
        if (i) out << ", ";
        out << "[" << format_frame_number(w.frame) << ", " << format_coord(w.position.x)
            << ", " << format_coord(w.position.y) << ", " << format_coord(z) << "]";
    }
    out << "]\nPlease verify the new path to ensure no further collisions. If "
           "no collision, please let engineer generate codes for this "
           "trajectory.";
    return out.str();
}

// Inserts the A*-fallback notice after the first sentence of the error text.
std::string with_astar_notice(const std::string& error_text) {
    size_t nl = error_text.find('\n');
    if (nl == std::string::npos) return error_text;
    return error_text.substr(0, nl) +
           " Collision was avoided using A* with smoothing.\n" +
           error_text.substr(nl + 1);
}

struct RepairTarget {
    OrientedBox moving;
    Vec3 start, goal;
    double z = 0.0;
    bool found = false;
};

RepairTarget repair_target_for(const CollisionReport& report, const AgentCommand& cmd,
                               const SceneState& scene) {
    RepairTarget t;
    if (report.moving_name == "human") {
        for (size_t i = 0; i < cmd.control_joints.size(); ++i) {
            if (cmd.control_joints[i] != "pelvis" || cmd.control_points[i].waypoints.empty())
                continue;
            t.moving = human_box(scene.human, 0.0);
            t.start = cmd.control_points[i].waypoints.front().position;
            t.goal = cmd.control_points[i].waypoints.back().position;
            t.z = t.start.z;
            t.found = true;
        }
        return t;
    }
    for (size_t i = 0; i < cmd.object_name.size(); ++i) {
        if (cmd.object_name[i] != report.moving_name || cmd.object_points[i].waypoints.empty())
            continue;
        t.moving = scene.find(report.moving_name)->box;
        t.start = cmd.object_points[i].waypoints.front().position;
        t.goal = cmd.object_points[i].waypoints.back().position;
        t.z = t.start.z;
        t.found = true;
    }
    return t;
}

}  // namespace

EpisodeResult run_episode(PlannerBackend& backend, const PlannerConfig& config,
                          const SceneState& scene, const std::string& instruction,
                          int max_steps, const ExecOptions& exec_opts) {
    EpisodeResult result;
    result.final_scene = scene;
    EpisodeLog& log = result.log;
    log.append("system", build_system_prompt(scene, instruction));

    int consecutive_errors = 0;
    for (int step = 0; step < max_steps; ++step) {
        std::string message;
        try {
            message = backend.next(log);
        } catch (const PlannerUnavailable& e) {
            log.append("user", std::string("Error: ") + e.what());
            log.outcome = "planner_unavailable";
            return result;
        }
        log.append("assistant", message);

        ParseResult parsed = parse_commands(message);
        if (parsed.error) {
            log.append("user", "Error: " + *parsed.error);
            if (++consecutive_errors >= config.max_consecutive_errors) {
                log.outcome = "error_budget_exhausted";
                return result;
            }
            continue;
        }
        if (parsed.commands.empty()) {
            // Planning prose without code; prompt for the next concrete step.
            log.append("user", "Please continue and provide the code for the next step.");
            continue;
        }

        bool step_failed = false;
        for (const AgentCommand& cmd : parsed.commands) {
            if (cmd.kind == CommandKind::TaskCompleted) {
                log.outcome = "completed";
                return result;
            }
            ExecutionResult exec;
            try {
                if (cmd.kind == CommandKind::GenerateMotion)
                    exec = generate_motion(result.final_scene, cmd.control_joints,
                                           cmd.control_points, cmd.text,
                                           cmd.number_frames, cmd.task_index, exec_opts);
                else
                    exec = generate_interaction(result.final_scene, cmd.control_joints,
                                                cmd.control_points, cmd.text,
                                                cmd.number_frames, cmd.task_index,
                                                cmd.object_name, cmd.object_points,
                                                exec_opts);
            } catch (const ProtocolError& e) {
                log.append("user", std::string("Error: ") + e.what());
                step_failed = true;
                break;
            }

            // Object tracks are rejected on interpenetration past the hard
            // margin. Clearance-only violations and pelvis contact with
            // adjacent furniture are reported but do not fail the step.
            const CollisionReport* bad = nullptr;
            for (const auto& hr : exec.hard_collision_reports) {
                if (!hr.collided || hr.moving_name == "human") continue;
                bad = &hr;
                for (const auto& r : exec.collision_reports)
                    if (r.collided && r.moving_name == hr.moving_name) {
                        bad = &r;
                        break;
                    }
                break;
            }
            if (bad) {
                std::string feedback = with_astar_notice(format_collision_error(*bad));
                RepairTarget target = repair_target_for(*bad, cmd, result.final_scene);
                if (target.found) {
                    std::set<std::string> ignore(cmd.object_name.begin(),
                                                 cmd.object_name.end());
                    ignore.insert(bad->moving_name);
                    try {
                        RepairResult repair = repair_track(
                            result.final_scene, target.moving, target.start,
                            target.goal, exec_opts.safety_margin, ignore);
                        feedback += "\n\n" + suggestion_text(repair, target.z);
                    } catch (const std::exception& e) {
                        feedback += std::string("\n\nA* could not find an "
                                                "alternative path: ") + e.what();
                    }
                }
                log.append("user", feedback);
                step_failed = true;
                break;
            }

            result.final_scene = exec.final_scene;
            result.clips.push_back(exec.clip);
            log.append("user", "exitcode: 0 (execution succeeded)\nCode output:\n\n" +
                                   emit_scene_text(result.final_scene));
        }

        if (step_failed) {
            if (++consecutive_errors >= config.max_consecutive_errors) {
                log.outcome = "error_budget_exhausted";
                return result;
            }
        } else {
            consecutive_errors = 0;
        }
    }
    log.outcome = "step_budget_exhausted";
    return result;
}

}  // namespace hoi
