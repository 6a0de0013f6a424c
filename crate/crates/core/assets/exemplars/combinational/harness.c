#include <assert.h>
#include <stdint.h>

struct module_sat_add8 {
    uint8_t a;
    uint8_t b;
    uint8_t result;
};
extern struct module_sat_add8 rtl;

uint8_t sat_add8(uint8_t a, uint8_t b);

int main(void)
{
    uint8_t a, b;
    __CPROVER_assume(rtl.a == a && rtl.b == b);
    uint8_t c_result = sat_add8(a, b);
    assert(c_result == rtl.result);
    return 0;
}
