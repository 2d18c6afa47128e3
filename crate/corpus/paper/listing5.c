int main()
{
    int i = 0;
    int k = 0;

    while (i < 1000000)
    {
        int j = unknown_int();
        if (!(1 <= j && j < 1000000))
            return 0;
        i = i + j;
        k++;
    }

    assert(k <= 1000000);
    return 0;
}
