int notmain(void){return 0;}
