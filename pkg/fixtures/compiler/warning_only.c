int main(void){return puts("hi");}
