#include <cstdio>

int main() {
    std::puts("ftccli: subcommands arrive with the workbench modules");
    return 0;
}
