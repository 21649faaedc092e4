#include <cstdio>

int main() {
    std::puts("bundlerec: CLI not wired up yet");
    return 1;
}
